#include "dirapprox/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dirapprox/error.hpp"
#include "dirapprox/variates.hpp"

namespace dirapprox {

SimplexPoint::SimplexPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  double sum = 0.0;
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (!(coords_[i] >= 0.0)) {
      fail(ErrorCode::kDomain,
           "simplex coordinate " + std::to_string(i + 1) + " is negative or NaN");
    }
    sum += coords_[i];
  }
  last_ = 1.0 - sum;
  if (last_ < -kSimplexTolerance) {
    fail(ErrorCode::kDomain, "simplex coordinates sum above one");
  }
}

bool SimplexPoint::interior() const noexcept {
  if (last_ <= 0.0) return false;
  return std::all_of(coords_.begin(), coords_.end(), [](double v) { return v > 0.0; });
}

DirichletParams::DirichletParams(std::vector<double> a) : a_(std::move(a)) {
  if (a_.size() < 2) fail(ErrorCode::kDimension, "Dirichlet needs K >= 2 parameters");
  double min_a = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a_.size(); ++i) {
    if (!(a_[i] > 0.0) || !std::isfinite(a_[i])) {
      fail(ErrorCode::kDomain, "Dirichlet parameter a" + std::to_string(i + 1) +
                                   " must be positive and finite");
    }
    s_ += a_[i];
    min_a = std::min(min_a, a_[i]);
    theta_circ_ += 1.0 - std::min(1.0, a_[i]);
  }
  theta_wedge_ = std::min(1.0, min_a);
  theta_ = theta_wedge_ / (theta_wedge_ + theta_circ_);
}

double dirichlet_log_density(const DirichletParams& p, const SimplexPoint& x) {
  if (x.dim() != p.dim()) fail(ErrorCode::kDimension, "point and parameter dimensions differ");
  double log_norm = std::lgamma(p.s());
  for (double ai : p.a()) log_norm -= std::lgamma(ai);
  double log_kernel = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const double xi = std::max(0.0, x.full(i));
    const double ai = p[i];
    if (xi == 0.0) {
      if (ai < 1.0) {
        fail(ErrorCode::kDomain, "density is unbounded on the face x" + std::to_string(i + 1) +
                                     " = 0 when a" + std::to_string(i + 1) + " < 1");
      }
      if (ai > 1.0) return -std::numeric_limits<double>::infinity();
      continue;
    }
    log_kernel += (ai - 1.0) * std::log(xi);
  }
  return log_norm + log_kernel;
}

double dirichlet_density(const DirichletParams& p, const SimplexPoint& x) {
  return std::exp(dirichlet_log_density(p, x));
}

SimplexPoint dirichlet_sample(const DirichletParams& p, RngStream& rng) {
  std::vector<double> full(p.dim());
  dirichlet_variate(rng, p.a(), full);
  full.pop_back();
  // Guard the sum against round-off pushing it past one.
  double sum = 0.0;
  for (double v : full) sum += v;
  if (sum > 1.0) {
    for (double& v : full) v /= sum;
  }
  return SimplexPoint(std::move(full));
}

double dirichlet_mixed_moment(const DirichletParams& p, std::span<const int> exponents) {
  if (exponents.size() != p.dim() && exponents.size() + 1 != p.dim()) {
    fail(ErrorCode::kDimension, "exponent vector length must be K or K-1");
  }
  double log_value = 0.0;
  int total = 0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    const int c = exponents[i];
    if (c < 0) fail(ErrorCode::kInvalidArgument, "exponents must be non-negative");
    total += c;
    log_value += std::lgamma(p[i] + c) - std::lgamma(p[i]);
  }
  if (total == 0) return 1.0;
  if (total <= 64) {
    // Small orders: exact products avoid lgamma cancellation.
    double value = 1.0;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      for (int k = 0; k < exponents[i]; ++k) value *= p[i] + k;
    }
    for (int k = 0; k < total; ++k) value /= p.s() + k;
    return value;
  }
  log_value -= std::lgamma(p.s() + total) - std::lgamma(p.s());
  return std::exp(log_value);
}

ThetaExponent theta_exponent(const DirichletParams& p) {
  return {p.theta(), p.theta() / (3.0 + p.theta())};
}

}  // namespace dirapprox
