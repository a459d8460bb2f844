#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirapprox/mutation.hpp"
#include "dirapprox/offspring.hpp"
#include "dirapprox/rng.hpp"
#include "dirapprox/simplex.hpp"

namespace dirapprox {

/// Allele counts of the first K-1 types; the last count is implicit.
struct ChainState {
  std::vector<std::int64_t> counts;
  std::int64_t population = 0;

  std::size_t dim() const noexcept { return counts.size() + 1; }
  std::int64_t last() const;
  /// Throws kDomain unless counts are non-negative and sum to at most N.
  void validate() const;
  SimplexPoint proportions() const;
};

/// Genealogy plus mutation. Without an offspring model the Wright-Fisher step
/// draws the next generation directly from MN(N; q(X)).
struct ChainModel {
  int population = 0;
  MutationMatrix mutation;
  std::optional<OffspringModel> offspring;

  std::size_t dim() const { return mutation.dim(); }
  std::string descriptor() const;
};

ChainState step_wright_fisher(const ChainState& x, const MutationMatrix& p, RngStream& rng);
ChainState step_cannings(const ChainState& x, const OffspringModel& m, const MutationMatrix& p,
                         RngStream& rng);

/// Reusable scratch space for stepping one chain in place.
class ChainStepper {
 public:
  explicit ChainStepper(const ChainModel& model);
  void advance(std::span<std::int64_t> counts, RngStream& rng);

 private:
  void mutate_children(std::span<std::int64_t> counts, RngStream& rng);

  const ChainModel& model_;
  std::size_t k_;
  std::vector<double> q_;
  std::vector<std::int64_t> full_;
  std::vector<std::int64_t> children_;
  std::vector<std::int64_t> draw_;
  std::vector<std::int64_t> offspring_;
  std::vector<std::int32_t> labels_;
  std::vector<char> identity_row_;
};

std::int64_t default_burn_in(const ChainModel& model);
std::int64_t default_thin(const ChainModel& model);

struct RunOptions {
  std::optional<std::int64_t> burn_in;
  std::optional<std::int64_t> thin;
  std::size_t n_samples = 0;
  std::size_t replicates = 8;
  std::optional<std::vector<std::int64_t>> initial;
  int workers = 1;
};

struct StationarityDiagnostic {
  double max_mean_drift = 0.0;    // |first-half mean - second-half mean|, max over coords
  double max_second_drift = 0.0;  // same for E W_i^2
};

/// Recorded proportions W = X/N, K-1 coordinates per sample, stored row-major
/// and grouped by replicate chain.
struct StationaryRun {
  std::size_t k = 0;
  int population = 0;
  std::vector<double> data;
  std::vector<std::size_t> replicate_sizes;
  std::int64_t burn_in = 0;
  std::int64_t thin = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string descriptor;
  StationarityDiagnostic diagnostic;

  std::size_t dim() const noexcept { return k - 1; }
  std::size_t size() const noexcept { return k > 1 ? data.size() / (k - 1) : 0; }
  std::span<const double> sample(std::size_t i) const {
    return {data.data() + i * (k - 1), k - 1};
  }
};

/// Runs independent replicate chains on rng.split(r) and concatenates their
/// samples in replicate order. Checks irreducibility first.
StationaryRun run_to_stationarity(const ChainModel& model, const RunOptions& options,
                                  const RngStream& rng);

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean of f with a batch-means standard error (batches are contiguous
/// within replicates, so autocorrelation inside a chain is absorbed).
MeanEstimate estimate_mean(const StationaryRun& run,
                           const std::function<double(std::span<const double>)>& f,
                           std::size_t batches = 64);

void write_samples_csv(const StationaryRun& run, const std::string& path);
/// Sidecar metadata: seed, stream, N, K, burn-in, thin, model descriptor.
std::string run_metadata_json(const StationaryRun& run);

/// E[(W'_i - W_i)(W'_j - W_j) | W] for the Wright-Fisher chain, closed form
/// in sigma_j and T_j (i == j allowed). Indices are < K-1.
double wf_conditional_second_moment(const MutationMatrix& p, int population,
                                    const SimplexPoint& w, std::size_t i, std::size_t j);

struct ConditionalMomentRow {
  std::size_t state = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  double closed = 0.0;
  double exact = 0.0;  // multinomial factorial moments
  double mc = 0.0;
  double mc_stderr = 0.0;
};

struct ConditionalMomentReport {
  std::vector<ConditionalMomentRow> rows;
  double max_exact_residual = 0.0;
  double max_mc_z = 0.0;  // |mc - closed| / stderr; zero when stderr is zero and they agree
};

ConditionalMomentReport verify_conditional_moments_wf(const MutationMatrix& p, int population,
                                                      const std::vector<ChainState>& states,
                                                      RngStream& rng,
                                                      std::size_t mc_steps = 100'000);

}  // namespace dirapprox
