#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dirapprox/rng.hpp"

namespace dirapprox {

inline constexpr double kSimplexTolerance = 1e-12;

/// A point of the closed simplex, stored as its first K-1 coordinates. The
/// last coordinate is implicit: x_K = 1 - sum(coords).
class SimplexPoint {
 public:
  /// Throws kDomain if a coordinate is negative or the sum exceeds one by more
  /// than kSimplexTolerance. Coordinates are stored exactly as given.
  explicit SimplexPoint(std::vector<double> coords);

  std::size_t dim() const noexcept { return coords_.size() + 1; }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  double last() const noexcept { return last_; }
  /// Coordinate i in 0..K-1, including the implicit last one.
  double full(std::size_t i) const { return i + 1 == dim() ? last_ : coords_[i]; }
  bool interior() const noexcept;

 private:
  std::vector<double> coords_;
  double last_;
};

/// Dirichlet parameter vector with its derived convex-set exponents.
class DirichletParams {
 public:
  explicit DirichletParams(std::vector<double> a);

  std::size_t dim() const noexcept { return a_.size(); }
  std::span<const double> a() const noexcept { return a_; }
  double operator[](std::size_t i) const { return a_[i]; }
  double s() const noexcept { return s_; }
  double theta_wedge() const noexcept { return theta_wedge_; }
  double theta_circ() const noexcept { return theta_circ_; }
  double theta() const noexcept { return theta_; }

 private:
  std::vector<double> a_;
  double s_ = 0.0;
  double theta_wedge_ = 1.0;
  double theta_circ_ = 0.0;
  double theta_ = 1.0;
};

double dirichlet_density(const DirichletParams& p, const SimplexPoint& x);

double dirichlet_log_density(const DirichletParams& p, const SimplexPoint& x);

SimplexPoint dirichlet_sample(const DirichletParams& p, RngStream& rng);

/// E[prod Z_i^{c_i}] over all K components (rising-factorial ratio).
/// `exponents` has length K, or K-1 with an implied zero for the last one.
double dirichlet_mixed_moment(const DirichletParams& p, std::span<const int> exponents);

struct ThetaExponent {
  double theta;
  double convex_rate;  // theta / (3 + theta)
};

ThetaExponent theta_exponent(const DirichletParams& p);

}  // namespace dirapprox
