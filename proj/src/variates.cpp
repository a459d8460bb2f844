#include "dirapprox/variates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dirapprox {

double standard_normal(RngStream& rng) {
  // Marsaglia polar method; the second variate is discarded so no state is
  // carried between calls.
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double r = u * u + v * v;
    if (r > 0.0 && r < 1.0) return u * std::sqrt(-2.0 * std::log(r) / r);
  }
}

double log_gamma_variate(RngStream& rng, double shape) {
  if (shape < 1.0) {
    // Boost: G(a) = G(a + 1) * U^(1/a).
    return log_gamma_variate(rng, shape + 1.0) + std::log(rng.uniform()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 ||
        std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return std::log(d) + std::log(v);
    }
  }
}

double gamma_variate(RngStream& rng, double shape) {
  return std::exp(log_gamma_variate(rng, shape));
}

std::int64_t binomial_variate(RngStream& rng, std::int64_t trials, double p) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(trials, p);
  return dist(rng);
}

void multinomial_variate(RngStream& rng, std::int64_t trials, std::span<const double> probs,
                         std::span<std::int64_t> out) {
  double remaining_mass = 0.0;
  for (double p : probs) remaining_mass += p;
  std::int64_t remaining = trials;
  const std::size_t last = probs.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    if (remaining == 0 || remaining_mass <= 0.0) {
      out[i] = 0;
      continue;
    }
    const double p = std::clamp(probs[i] / remaining_mass, 0.0, 1.0);
    out[i] = binomial_variate(rng, remaining, p);
    remaining -= out[i];
    remaining_mass -= probs[i];
  }
  out[last] = remaining;
}

void dirichlet_variate(RngStream& rng, std::span<const double> shape, std::span<double> out) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out[i] = shape[i] > 0.0 ? log_gamma_variate(rng, shape[i])
                            : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, out[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out[i] = std::exp(out[i] - max_log);
    total += out[i];
  }
  for (std::size_t i = 0; i < shape.size(); ++i) out[i] /= total;
}

std::size_t categorical_variate(RngStream& rng, std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  return probs.size() - 1;
}

std::uint64_t uniform_index(RngStream& rng, std::uint64_t n) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace dirapprox
