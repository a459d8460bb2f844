#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dirapprox/rng.hpp"
#include "dirapprox/simplex.hpp"
#include "dirapprox/test_functions.hpp"

namespace dirapprox {

// ---------------------------------------------------------------------------
// Stein operator  A'f = sum_ij x_i (d_ij - x_j) f_ij + sum_i (a_i - s x_i) f_i
// over the K-1 free coordinates.

double stein_operator_apply(const DirichletParams& a, std::span<const double> grad,
                            std::span<const double> hess, std::span<const double> x);
double stein_operator_apply(const DirichletParams& a, const Polynomial& f,
                            std::span<const double> x);
/// Partials by central differences with the stencil centre pulled inside the
/// simplex so that every evaluation point is feasible.
double stein_operator_apply(const DirichletParams& a,
                            const std::function<double(std::span<const double>)>& f,
                            const SimplexPoint& x, double step = 1e-5);

/// A'f as a polynomial.
Polynomial stein_operator(const DirichletParams& a, const Polynomial& f);

/// E[A' x^c](Z) for Z ~ Dir(a) from exact mixed moments. `c` has K entries
/// (the last one a power of the implicit coordinate) or K-1.
double characterization_residual(const DirichletParams& a, std::span<const int> c);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

McEstimate characterization_mc(const DirichletParams& a, std::span<const int> c, RngStream& rng,
                               std::size_t samples);

// ---------------------------------------------------------------------------
// Death-process schedule: level n is held for a mean time 2/(n(n+s-1)).

struct DeathProcessSchedule {
  double s = 0.0;
  std::int64_t levels = 0;
  double tail = 0.0;  // bound on sum_{n > levels} 2/(n(n+s-1))

  double holding(std::int64_t n) const { return 2.0 / (n * (n + s - 1.0)); }
  /// 2(s+1)/s, the bound on the full holding-time sum.
  double total_bound() const { return 2.0 * (s + 1.0) / s; }

  static DeathProcessSchedule with_levels(double s, std::int64_t levels);
  /// Smallest level count with scale * tail < tolerance.
  static DeathProcessSchedule for_tolerance(double s, double scale, double tolerance);
};

/// Integral-comparison bound on sum_{n > M} 2/(n(n+s-1)).
double holding_tail_bound(double s, std::int64_t levels);
/// Partial sum over n = 1..M.
double holding_partial_sum(double s, std::int64_t levels);

struct SteinOptions {
  std::size_t mc_per_level = 100'000;  // draws at level 1
  std::size_t min_per_level = 4;
  int workers = 1;
};

struct SteinEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  double truncation = 0.0;
};

/// f(x) for the Stein equation A'f = h - E h(Z), from the level sums
/// -2 f(x) = sum_n E[h~(Z) | L = n] E Y_n, Z | n ~ Dir(a + MN(n; x)).
/// Levels 1..64 are sampled one by one on stream rng.split(n); deeper levels
/// form doubling blocks [lo, 2lo-1] on rng.split(lo), with the level drawn in
/// proportion to E Y_n. A stratum of weight W gets
/// max(min_per_level, ceil(mc_per_level * W / E Y_1)) draws.
SteinEstimate solve_stein_f(const DirichletParams& a, const TestFunction& h, double eh,
                            const SimplexPoint& x, const DeathProcessSchedule& schedule,
                            const SteinOptions& options, const RngStream& rng);

/// f(x + eps e_i) - f(x) by the multinomial/Gamma coupling: the extra mass
/// eps is a separate category whose Gamma weight moves from the last type to
/// coordinate i. Truncation bound eps |h|_1 / (M + s).
SteinEstimate stein_f_difference(const DirichletParams& a, const TestFunction& h,
                                 const SimplexPoint& x, std::size_t i, double eps,
                                 const DeathProcessSchedule& schedule, const SteinOptions& options,
                                 const RngStream& rng);

/// f(x + e1 e_i + e2 e_j) - f(x + e1 e_i) - f(x + e2 e_j) + f(x), coupled the
/// same way. Truncation bound e1 e2 |h|_2 / (M + s + 1).
SteinEstimate stein_f_second_difference(const DirichletParams& a, const TestFunction& h,
                                        const SimplexPoint& x, std::size_t i, std::size_t j,
                                        double eps_i, double eps_j,
                                        const DeathProcessSchedule& schedule,
                                        const SteinOptions& options, const RngStream& rng);

struct SolutionBoundReport {
  double s = 0.0;
  double centered_sup = 0.0;  // bound on ||h - E h(Z)||
  double eh = 0.0;
  // Sup bound: max over the grid of |f| and of |f| - slack.
  double sup_f = 0.0;
  double sup_f_slack = 0.0;
  double sup_budget = 0.0;  // (s+1)/s ||h~||
  bool sup_pass = true;
  // First and second difference quotients.
  double lip1 = 0.0;
  double lip1_slack = 0.0;
  double lip1_budget = 0.0;  // |h|_1 / s
  bool lip1_pass = true;
  double lip2 = 0.0;
  double lip2_slack = 0.0;
  double lip2_budget = 0.0;  // |h|_2 / (2(s+1))
  bool lip2_pass = true;
  std::vector<SteinEstimate> f_values;
  bool pass() const { return sup_pass && lip1_pass && lip2_pass; }
};

/// Checks sup |f| <= (s+1)/s ||h~|| and |f|_k <= |h|_k/(k(s+k-1)), k = 1, 2,
/// at the grid points; each estimate is reduced by 4 stderr + truncation
/// before comparison.
SolutionBoundReport verify_solution_bounds(const DirichletParams& a, const TestFunction& h,
                                           const std::vector<SimplexPoint>& grid,
                                           const DeathProcessSchedule& schedule,
                                           const SteinOptions& options, const RngStream& rng,
                                           double eps = 0.05);

/// A'[f^](x) - h~(x) with the partials of f^ from coupled central differences
/// of step eps. For quadratic h the difference quotients of the (quadratic)
/// solution are exact, so only Monte Carlo noise remains.
SteinEstimate stein_equation_residual(const DirichletParams& a, const TestFunction& h, double eh,
                                      const SimplexPoint& x, double eps,
                                      const DeathProcessSchedule& schedule,
                                      const SteinOptions& options, const RngStream& rng);

// ---------------------------------------------------------------------------
// Exchangeable-pair bound.

struct PairModel {
  std::size_t dim = 0;  // K-1
  /// Draws W' given W.
  std::function<void(std::span<const double> w, RngStream& rng, std::span<double> next)> draw_next;
  /// Optional closed form of E[(W'_m - W_m)(W'_j - W_j) | W], row-major dim x dim.
  std::function<void(std::span<const double> w, std::span<double> out)> cond_second;
  /// Optional closed form of R(W).
  std::function<void(std::span<const double> w, std::span<double> out)> remainder;
};

struct PairBoundOptions {
  std::size_t inner = 64;  // fresh transitions per outer state
  bool use_hooks = true;   // false forces nested Monte Carlo
  int workers = 1;
};

struct PairBoundEstimate {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double a1_stderr = 0.0, a2_stderr = 0.0, a3_stderr = 0.0;
  double constant = 6.0;  // 18 when Lambda is a multiple of the identity
  double coeff_h1 = 0.0, coeff_h2 = 0.0, coeff_h21 = 0.0;
  double theta = 0.0;
  double convex_rate = 0.0;
  double convex_value = 0.0;  // (A1 + A2 + A3)^rate, constant unknown
  double smooth_bound(double h1, double h2, double h21) const {
    return coeff_h1 * h1 + coeff_h2 * h2 + coeff_h21 * h21;
  }
};

/// Monte Carlo A1, A2, A3 over the outer states (row-major, dim per state).
/// Throws kDomain for singular Lambda and kInvalidArgument for inner < 2.
PairBoundEstimate exchangeable_pair_bound(const PairModel& model, std::span<const double> states,
                                          const Eigen::MatrixXd& lambda, const DirichletParams& a,
                                          const PairBoundOptions& options, const RngStream& rng);

}  // namespace dirapprox
