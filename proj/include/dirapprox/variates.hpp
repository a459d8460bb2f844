#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dirapprox/rng.hpp"

namespace dirapprox {

double standard_normal(RngStream& rng);

/// log of a Gamma(shape, 1) draw. Working in log space keeps tiny shapes
/// (whose draws underflow a double) usable for Dirichlet normalization.
double log_gamma_variate(RngStream& rng, double shape);

double gamma_variate(RngStream& rng, double shape);

std::int64_t binomial_variate(RngStream& rng, std::int64_t trials, double p);

/// Multinomial counts by sequential conditional binomials. `probs` need not be
/// normalized; `out` must have the same length.
void multinomial_variate(RngStream& rng, std::int64_t trials, std::span<const double> probs,
                         std::span<std::int64_t> out);

/// Dirichlet draw over all `shape.size()` components (the full vector, summing
/// to one). Zero shapes are allowed and yield an exact zero component.
void dirichlet_variate(RngStream& rng, std::span<const double> shape, std::span<double> out);

std::size_t categorical_variate(RngStream& rng, std::span<const double> probs);

/// Uniform integer in [0, n).
std::uint64_t uniform_index(RngStream& rng, std::uint64_t n);

}  // namespace dirapprox
