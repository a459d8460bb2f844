#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dirapprox/test_functions.hpp"

namespace dirapprox {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { kWfTheorem1, kCanningsTheorem2, kPolyaTheorem4, kSteinVerify, kMomentsVerify };

std::string to_string(ExperimentKind kind);

/// Flat "key = value" text. Values are JSON (numbers, strings, arrays,
/// booleans) or bare words taken as strings; '#' starts a comment outside
/// quotes. Errors carry the line number and key.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(const std::string& text, const std::string& base_dir = ".");
  static ExperimentConfig load(const std::string& path);

  /// Command-line override; `value` is parsed like a config value.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const nlohmann::json& at(const std::string& key) const;
  const std::map<std::string, nlohmann::json>& values() const noexcept { return values_; }
  /// Paths in the file resolve against its directory.
  std::string resolve_path(const std::string& p) const;

  /// Sorted key = value lines, without output.dir.
  std::string canonical() const;
  /// 64-bit FNV-1a of the canonical text.
  std::uint64_t hash() const;
  std::string hash_hex() const;

 private:
  std::map<std::string, nlohmann::json> values_;
  std::string base_dir_ = ".";
};

/// Static checks plus derived quantities, as printable text. Throws Error
/// naming the offending key.
std::string validate_config(const ExperimentConfig& config);

struct ExperimentResult {
  int exit_code = 0;  // 0 all certifications pass, 2 otherwise
  bool pass = true;
  std::string summary_json;
  std::vector<std::string> artifacts;
};

/// Runs the experiment and writes samples.csv, samples.meta.json, bound.json,
/// gaps.csv and summary.json into out_dir (created if missing). Output bytes
/// do not depend on `workers`.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                int workers);

/// Bound report for the configured model without simulation.
std::string bound_command(const ExperimentConfig& config);
/// Exact factorial moments, diagnostics and identity residuals.
std::string moments_command(const ExperimentConfig& config, int workers);
/// Estimate of the Stein solution at stein.x for test function stein.h.
std::string stein_f_command(const ExperimentConfig& config, int workers);

/// Parses tags produced by the built-in factories: "x1^2*x2", "cos(1;0)",
/// "sin(2;-1)", "bump(x1;c=0.4;r=0.3)".
TestFunction parse_test_function(const std::string& tag, std::size_t dim);

}  // namespace dirapprox
