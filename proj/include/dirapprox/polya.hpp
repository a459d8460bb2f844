#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dirapprox/bounds.hpp"
#include "dirapprox/distance.hpp"
#include "dirapprox/rng.hpp"
#include "dirapprox/simplex.hpp"
#include "dirapprox/stein.hpp"
#include "dirapprox/test_functions.hpp"

namespace dirapprox {

/// Urn after n draws. Counts cover the first K-1 colours; the state before
/// the last draw is kept so the last draw can be resampled.
struct UrnState {
  std::vector<double> a;
  std::int64_t n = 0;
  std::vector<std::int64_t> counts;       // X(n)
  std::vector<std::int64_t> prev_counts;  // X(n-1)
  std::size_t last_draw = 0;              // colour of draw n, 0..K-1
  std::size_t dim() const noexcept { return a.size(); }
  std::vector<double> proportions() const;
};

/// Sequential draws: colour i at step j with probability (X_i(j-1)+a_i)/(j-1+s).
UrnState simulate_urn(const DirichletParams& a, std::int64_t n, RngStream& rng);

/// (W, W') with W' = W - Y(n)/n + Y'(n)/n and Y'(n) redrawn given X(n-1).
std::pair<std::vector<double>, std::vector<double>> resample_pair(const UrnState& state,
                                                                  RngStream& rng);

/// X(n) through its Dirichlet-multinomial law (K-1 counts), O(K) per draw.
std::vector<std::int64_t> sample_urn_counts(const DirichletParams& a, std::int64_t n,
                                            RngStream& rng);

/// Exact E[prod W_i(n)^{c_i}] over the free coordinates via factorial moments.
double urn_moment(const DirichletParams& a, std::int64_t n, std::span<const int> c);
double urn_expectation(const Polynomial& p, const DirichletParams& a, std::int64_t n);

/// Exchangeable pair with the last draw resampled, given W = X(n)/n: Y(n) is
/// one of the n drawn balls chosen uniformly, so that X(n-1) = X(n) - Y(n).
/// Hooks carry the closed-form second moments; the remainder is zero.
PairModel polya_pair_model(const DirichletParams& a, std::int64_t n);
/// Lambda = I / (n (n + s - 1)).
Eigen::MatrixXd polya_lambda(const DirichletParams& a, std::int64_t n);

struct PairIdentityReport {
  bool exact = true;
  std::size_t states = 0;
  double max_drift_residual = 0.0;
  double max_second_residual = 0.0;
  bool drift_zero = true;   // exact mode: every residual is exactly 0
  bool second_zero = true;
  double max_triple = 0.0;           // max over non-distinct (i,j,k) of E|D_i D_j D_k|
  double max_triple_distinct = 0.0;  // max over distinct triples
  bool triple_ok = true;             // <= n^-3, and distinct triples exactly 0
};

inline constexpr std::int64_t kMaxExactUrnDraws = 10;
inline constexpr std::size_t kMaxExactUrnColours = 3;

/// Exact rational check for n <= 10 and K <= 3; otherwise `states` draws of
/// X(n), with conditional moments computed exactly at each.
PairIdentityReport verify_pair_identities(const DirichletParams& a, std::int64_t n,
                                          RngStream* rng = nullptr, std::size_t states = 1000);

struct Theorem4Certification {
  std::int64_t draws = 0;
  BoundReport bound;
  std::vector<GapEstimate> rows;
  std::vector<double> samples;  // W(n) draws, K-1 per row; empty when all h are polynomial
  bool pass = true;
};

/// Polynomial test functions use exact urn moments (zero stderr); the rest
/// use `replicates` draws of X(n) on rng.split(r).
Theorem4Certification certify_theorem4(const DirichletParams& a, std::int64_t n,
                                       const std::vector<TestFunction>& battery,
                                       std::size_t replicates, const RngStream& rng,
                                       int workers = 1);

}  // namespace dirapprox
