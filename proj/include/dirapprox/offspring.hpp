#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dirapprox/rational.hpp"
#include "dirapprox/rng.hpp"

namespace dirapprox {

enum class OffspringKind { kWrightFisher, kMoran, kDirichletMultinomial, kTable };

/// One line of an explicit offspring table: an unordered offspring multiset
/// (N entries summing to N) and its probability. The law on ordered vectors
/// spreads each probability uniformly over the distinct orderings.
struct TableEntry {
  std::vector<int> multiset;
  double prob = 0.0;
};

class OffspringModel {
 public:
  static OffspringModel wright_fisher(int population);
  static OffspringModel moran(int population);
  static OffspringModel dirichlet_multinomial(int population, double phi);
  static OffspringModel table(int population, std::vector<TableEntry> entries);
  /// Parses lines of the form "multiset: v1,...,vN ; prob: p".
  static OffspringModel load_table(const std::string& path);

  int population() const noexcept { return population_; }
  OffspringKind kind() const noexcept { return kind_; }
  double phi() const noexcept { return phi_; }
  const std::vector<TableEntry>& entries() const noexcept { return entries_; }
  /// Table probabilities renormalized exactly to sum to one.
  const std::vector<Rational>& exact_probs() const noexcept { return exact_probs_; }
  std::string descriptor() const;

 private:
  OffspringModel(OffspringKind kind, int population) : kind_(kind), population_(population) {}
  friend void sample_offspring(const OffspringModel&, RngStream&, std::span<std::int64_t>);

  OffspringKind kind_;
  int population_;
  double phi_ = 0.0;
  std::vector<TableEntry> entries_;
  std::vector<Rational> exact_probs_;
  std::vector<double> cumulative_;
};

std::string to_string(OffspringKind kind);
std::optional<OffspringKind> parse_offspring_kind(const std::string& name);

struct OffspringMoments {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
};

struct ExactOffspringMoments {
  Rational alpha, beta, gamma, delta;
  OffspringMoments to_double() const;
};

/// Factorial moments in exact arithmetic (closed forms for the built-in kinds,
/// exact sums for tables). Does not reject degenerate laws.
ExactOffspringMoments exact_moments(const OffspringModel& m);

/// Throws kDegenerate when alpha == 0.
OffspringMoments moments(const OffspringModel& m);

/// Exchangeable mixed moments E V1^2, E V1 V2, ... expressed through the
/// factorial moments. Order matches `kIdentityNames`. Entries that need more
/// than N distinct individuals are empty.
inline constexpr std::array<const char*, 10> kIdentityNames = {
    "E V1^2",      "E V1 V2",    "E V1^3",   "E V1 V2 V3", "E V1^2 V2",
    "E V1^2 V2^2", "E V1^4",     "E V1 V2 V3 V4", "E V1^2 V2 V3", "E V1^3 V2"};
inline constexpr std::array<std::array<int, 4>, 10> kIdentityExponents = {{
    {2, 0, 0, 0}, {1, 1, 0, 0}, {3, 0, 0, 0}, {1, 1, 1, 0}, {2, 1, 0, 0},
    {2, 2, 0, 0}, {4, 0, 0, 0}, {1, 1, 1, 1}, {2, 1, 1, 0}, {3, 1, 0, 0}}};

std::array<std::optional<Rational>, 10> closed_form_mixed_moments(const ExactOffspringMoments& m,
                                                                  int population);

/// Full law on ordered offspring vectors (compositions of N into N parts).
/// Only feasible for small N; throws kStateSpace for N > kMaxEnumeratedPopulation.
inline constexpr int kMaxEnumeratedPopulation = 8;
std::vector<std::pair<std::vector<int>, Rational>> enumerate_law(const OffspringModel& m);

struct IdentityResidual {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double stderr_ = 0.0;  // zero in exact mode
  bool skipped = false;  // identity needs more individuals than N
};

struct IdentityReport {
  bool exact = true;
  std::size_t mc_samples = 0;
  std::vector<IdentityResidual> rows;
  double max_residual() const;
};

/// Left-hand sides by exact enumeration when N <= 8, otherwise by Monte Carlo
/// with `mc_samples` draws from `rng`.
IdentityReport verify_moment_identities(const OffspringModel& m, RngStream& rng,
                                        std::size_t mc_samples = 1'000'000);

void sample_offspring(const OffspringModel& m, RngStream& rng, std::span<std::int64_t> out);
std::vector<std::int64_t> sample_offspring(const OffspringModel& m, RngStream& rng);

/// E M^k for M = V_1 + ... + V_x, k = 1..4.
std::array<double, 4> aggregate_moments(const OffspringModel& m, int x);
std::array<Rational, 4> exact_aggregate_moments(const OffspringModel& m, int x);

struct MohleDiagnostics {
  double alpha_over_n;
  double beta_over_alpha_n;
  double gamma_over_alpha_n;
};

MohleDiagnostics mohle_diagnostics(const OffspringModel& m);

}  // namespace dirapprox
