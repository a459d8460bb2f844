#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dirapprox/chain.hpp"
#include "dirapprox/rng.hpp"
#include "dirapprox/simplex.hpp"
#include "dirapprox/special.hpp"
#include "dirapprox/test_functions.hpp"

namespace dirapprox {

/// Absolute slack for floating-point error in exact evaluations (linear
/// solves, moment sums); some bounds are exactly zero, e.g. for linear h.
inline constexpr double kGapRoundoff = 1e-9;

struct GapEstimate {
  std::string tag;
  double gap = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;
  bool pass = true;  // gap - 4 stderr <= bound + kGapRoundoff
};

GapEstimate make_gap(std::string tag, double estimate, double estimate_stderr,
                     const Expectation& eh, double bound);

/// A finite distribution on the simplex, e.g. an exact stationary law.
struct WeightedSample {
  std::size_t k = 0;
  std::vector<double> points;  // K-1 coordinates per atom, row-major
  std::vector<double> weights;
  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * (k - 1), k - 1};
  }
};

GapEstimate smooth_gap(const StationaryRun& sample, const DirichletParams& a,
                       const TestFunction& h, double bound);
/// Exact law: zero standard error.
GapEstimate smooth_gap(const WeightedSample& law, const DirichletParams& a,
                       const TestFunction& h, double bound);

struct KolmogorovResult {
  double distance = 0.0;        // sup |F_emp - I_x(a1, a2)|
  double interval_bound = 0.0;  // 2 * distance bounds the interval distance
  std::size_t atoms = 0;
};

KolmogorovResult kolmogorov_k2(const StationaryRun& sample, const DirichletParams& a);
KolmogorovResult kolmogorov_k2(const WeightedSample& law, const DirichletParams& a);
KolmogorovResult kolmogorov_k2(std::vector<double> values, const DirichletParams& a);

/// Two-sample Kolmogorov-Smirnov statistic.
double kolmogorov_two_sample(std::vector<double> x, std::vector<double> y);

/// Dirichlet reference sample for convex probes, drawn once and reused.
class ProbeReference {
 public:
  ProbeReference(const DirichletParams& a, std::size_t size, const RngStream& rng);
  const DirichletParams& params() const noexcept { return a_; }
  std::size_t size() const noexcept { return x1_.size(); }
  std::span<const double> x1() const noexcept { return x1_; }
  std::span<const double> x2() const noexcept { return x2_; }

 private:
  DirichletParams a_;
  std::vector<double> x1_, x2_;
};

/// Half-plane u1 x1 + u2 x2 <= c or box [lo1,hi1] x [lo2,hi2].
struct ConvexProbe {
  bool box = false;
  double u1 = 0.0, u2 = 0.0, c = 0.0;
  double lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;
  bool contains(double x1, double x2) const;
};

struct ConvexProbeResult {
  double lower_bound = 0.0;  // max over probes; a lower bound on the convex-set distance
  std::size_t probes = 0;
  std::vector<double> discrepancies;
  std::string label = "lower bound on the convex-set distance";
};

/// The first probe is the half-plane x1 <= a1/s; the rest alternate random
/// half-planes and axis boxes drawn from rng.split(1), so a longer run
/// extends a shorter one.
std::vector<ConvexProbe> make_probes(const DirichletParams& a, std::size_t n, const RngStream& rng);

ConvexProbeResult convex_probe_k3(const StationaryRun& sample, const ProbeReference& reference,
                                  std::size_t n_probes, const RngStream& rng);
ConvexProbeResult convex_probe_k3(std::span<const double> sample_rows,
                                  const ProbeReference& reference, std::size_t n_probes,
                                  const RngStream& rng);

/// Number of count vectors of N individuals over K types.
std::uint64_t state_count(int population, std::size_t k);

struct ExactStationary {
  std::size_t k = 0;
  int population = 0;
  std::vector<std::int64_t> counts;  // K-1 counts per state, row-major
  std::vector<double> probs;
  double residual = 0.0;  // max |pi P - pi|
  WeightedSample law() const;
};

inline constexpr std::uint64_t kMaxExactStates = 3000;

/// Builds the transition matrix and solves pi P = pi densely. Cannings
/// kernels other than Moran and Wright-Fisher need N <= 8.
ExactStationary exact_stationary(const ChainModel& model,
                                 std::uint64_t max_states = kMaxExactStates);

/// Least-squares slope of log(y) on log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

/// Columns h_tag, gap, stderr, bound, pass. A non-empty `comment` becomes a
/// leading "# ..." line.
void write_gap_csv(const std::vector<GapEstimate>& rows, const std::string& path,
                   const std::string& comment = "");
/// RFC 4180 quoting when a field contains a comma, quote or newline.
std::string csv_field(const std::string& s);

}  // namespace dirapprox
