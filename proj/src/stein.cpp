#include "dirapprox/stein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "dirapprox/error.hpp"
#include "dirapprox/parallel.hpp"
#include "dirapprox/variates.hpp"

namespace dirapprox {

double stein_operator_apply(const DirichletParams& a, std::span<const double> grad,
                            std::span<const double> hess, std::span<const double> x) {
  const std::size_t d = x.size();
  if (a.dim() != d + 1 || grad.size() != d || hess.size() != d * d) {
    fail(ErrorCode::kDimension, "Stein operator dimensions differ");
  }
  const double s = a.s();
  double out = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out += x[i] * ((i == j ? 1.0 : 0.0) - x[j]) * hess[i * d + j];
    }
    out += (a[i] - s * x[i]) * grad[i];
  }
  return out;
}

double stein_operator_apply(const DirichletParams& a, const Polynomial& f,
                            std::span<const double> x) {
  return stein_operator(a, f)(x);
}

double stein_operator_apply(const DirichletParams& a,
                            const std::function<double(std::span<const double>)>& f,
                            const SimplexPoint& x, double step) {
  const std::size_t d = x.dim() - 1;
  if (a.dim() != x.dim()) fail(ErrorCode::kDimension, "Stein operator dimensions differ");
  if (!(step > 0.0) || 2.0 * step * x.dim() >= 1.0) {
    fail(ErrorCode::kInvalidArgument, "finite-difference step out of range");
  }
  // Pull the stencil centre towards the barycentre until every coordinate,
  // including the implicit one, clears 2 * step.
  const double margin = 2.0 * step;
  const double bary = 1.0 / static_cast<double>(x.dim());
  double t = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double xi = x.full(i);
    if (xi < margin) t = std::max(t, (margin - xi) / (bary - xi));
  }
  std::vector<double> c(d);
  for (std::size_t i = 0; i < d; ++i) c[i] = (1.0 - t) * x[i] + t * bary;
  std::vector<double> p = c;
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    p = c;
    p[i] += di;
    p[j] += dj;
    return f(p);
  };
  const double f0 = f(c);
  std::vector<double> grad(d), hess(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    const double fp = at(i, step, i, 0.0);
    const double fm = at(i, -step, i, 0.0);
    grad[i] = (fp - fm) / (2.0 * step);
    hess[i * d + i] = (fp - 2.0 * f0 + fm) / (step * step);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = (at(i, step, j, step) - at(i, step, j, -step) - at(i, -step, j, step) +
                        at(i, -step, j, -step)) /
                       (4.0 * step * step);
      hess[i * d + j] = hess[j * d + i] = v;
    }
  }
  return stein_operator_apply(a, grad, hess, c);
}

Polynomial stein_operator(const DirichletParams& a, const Polynomial& f) {
  const std::size_t d = f.dim();
  if (a.dim() != d + 1) fail(ErrorCode::kDimension, "Stein operator dimensions differ");
  const double s = a.s();
  Polynomial out(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<int> ei(d, 0);
    ei[i] = 1;
    const Polynomial fi = f.derivative(i);
    // (a_i - s x_i) f_i
    Polynomial drift(d);
    drift.add_term(std::vector<int>(d, 0), a[i]);
    drift.add_term(ei, -s);
    out = out + drift * fi;
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<int> eij = ei;
      ++eij[j];
      Polynomial diff(d);
      if (i == j) diff.add_term(ei, 1.0);
      diff.add_term(eij, -1.0);
      out = out + diff * fi.derivative(j);
    }
  }
  return out;
}

namespace {

Polynomial monomial_for(const DirichletParams& a, std::span<const int> c) {
  if (c.size() == a.dim()) return Polynomial::full_monomial(c);
  if (c.size() + 1 == a.dim()) return Polynomial::monomial(std::vector<int>(c.begin(), c.end()));
  fail(ErrorCode::kDimension, "monomial exponents need K or K-1 entries");
}

}  // namespace

double characterization_residual(const DirichletParams& a, std::span<const int> c) {
  return stein_operator(a, monomial_for(a, c)).expectation(a);
}

McEstimate characterization_mc(const DirichletParams& a, std::span<const int> c, RngStream& rng,
                               std::size_t samples) {
  if (samples < 2) fail(ErrorCode::kInvalidArgument, "need at least 2 samples");
  const Polynomial g = stein_operator(a, monomial_for(a, c));
  double sum = 0.0, sq = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    const auto z = dirichlet_sample(a, rng);
    const double v = g(z.coords());
    sum += v;
    sq += v * v;
  }
  const double m = static_cast<double>(samples);
  const double mean = sum / m;
  const double var = std::max(0.0, (sq - m * mean * mean) / (m - 1.0));
  return {mean, std::sqrt(var / m)};
}

double holding_tail_bound(double s, std::int64_t levels) {
  if (!(s > 0.0)) fail(ErrorCode::kDomain, "s must be positive");
  if (levels < 1) fail(ErrorCode::kInvalidArgument, "schedule needs at least one level");
  const double m = static_cast<double>(levels);
  // Terms decrease in n, so the tail is below the integral from M to infinity.
  if (std::abs(s - 1.0) < 1e-12) return 2.0 / m;
  return 2.0 * std::log1p((s - 1.0) / m) / (s - 1.0);
}

double holding_partial_sum(double s, std::int64_t levels) {
  double total = 0.0;
  for (std::int64_t n = levels; n >= 1; --n) total += 2.0 / (n * (n + s - 1.0));
  return total;
}

DeathProcessSchedule DeathProcessSchedule::with_levels(double s, std::int64_t levels) {
  DeathProcessSchedule out;
  out.s = s;
  out.levels = levels;
  out.tail = holding_tail_bound(s, levels);
  return out;
}

DeathProcessSchedule DeathProcessSchedule::for_tolerance(double s, double scale,
                                                         double tolerance) {
  if (!(tolerance > 0.0)) fail(ErrorCode::kInvalidArgument, "tolerance must be positive");
  if (!(scale >= 0.0)) fail(ErrorCode::kInvalidArgument, "scale must be non-negative");
  if (scale * holding_tail_bound(s, 1) < tolerance) return with_levels(s, 1);
  std::int64_t hi = 1;
  while (scale * holding_tail_bound(s, hi) >= tolerance) {
    if (hi > (std::int64_t{1} << 40)) fail(ErrorCode::kInvalidArgument, "tolerance too small");
    hi *= 2;
  }
  std::int64_t lo = hi / 2;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (scale * holding_tail_bound(s, mid) < tolerance) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return with_levels(s, hi);
}

namespace {

constexpr std::int64_t kExactLevels = 64;

// sum_{n=lo}^{hi} 2/(n(n+s-1)) through digamma differences.
double holding_block_sum(double s, std::int64_t lo, std::int64_t hi) {
  if (hi - lo < 64) {
    double t = 0.0;
    for (std::int64_t n = hi; n >= lo; --n) t += 2.0 / (n * (n + s - 1.0));
    return t;
  }
  using boost::math::digamma;
  const double l = static_cast<double>(lo), u = static_cast<double>(hi);
  if (std::abs(s - 1.0) < 1e-8) return 2.0 * (boost::math::trigamma(l) - boost::math::trigamma(u + 1.0));
  return 2.0 / (s - 1.0) * ((digamma(u + 1.0) - digamma(l)) - (digamma(u + s) - digamma(l + s - 1.0)));
}

struct Move {
  double eps;
  std::size_t to;
};

struct LevelResult {
  double mean = 0.0;
  double var_of_mean = 0.0;
};

// -2 * (f-combination) = sum_n E Y_n E[combination of h(Z) | L = n].
SteinEstimate level_sum(const DirichletParams& a, const TestFunction& h, double eh,
                        const SimplexPoint& x, const std::vector<Move>& moves,
                        const DeathProcessSchedule& schedule, const SteinOptions& options,
                        const RngStream& rng) {
  const std::size_t k = a.dim();
  const std::size_t d = k - 1;
  if (x.dim() != k || h.dim() != d) fail(ErrorCode::kDimension, "Stein solver dimensions differ");
  if (std::abs(schedule.s - a.s()) > 1e-12 * std::max(1.0, a.s())) {
    fail(ErrorCode::kInvalidArgument, "schedule s does not match the Dirichlet parameters");
  }
  if (schedule.levels < 1) fail(ErrorCode::kInvalidArgument, "schedule has no levels");
  if (options.mc_per_level < 1 || options.min_per_level < 2) {
    fail(ErrorCode::kInvalidArgument, "need mc_per_level >= 1 and min_per_level >= 2");
  }
  const std::size_t e = moves.size();
  std::vector<double> probs;
  double moved = 0.0;
  for (const auto& mv : moves) {
    if (!(mv.eps > 0.0)) fail(ErrorCode::kInvalidArgument, "difference step must be positive");
    if (mv.to >= d) fail(ErrorCode::kDimension, "difference coordinate out of range");
    probs.push_back(mv.eps);
    moved += mv.eps;
  }
  for (std::size_t i = 0; i < d; ++i) probs.push_back(x[i]);
  const double rest = x.last() - moved;
  if (rest < -1e-12) fail(ErrorCode::kDomain, "difference step leaves the simplex");
  probs.push_back(std::max(0.0, rest));

  const std::int64_t levels = schedule.levels;
  const double s = a.s();
  const double w1 = schedule.holding(1);
  auto allocation = [&](double weight) {
    return std::max<std::size_t>(
        options.min_per_level,
        static_cast<std::size_t>(std::ceil(static_cast<double>(options.mc_per_level) * weight / w1)));
  };

  // Strata: levels 1..kExactLevels one by one, then doubling blocks [lo, hi]
  // in which the level is drawn with probability proportional to E Y_n.
  struct Stratum {
    std::int64_t lo, hi;
    double weight;
  };
  std::vector<Stratum> strata;
  const std::int64_t exact = std::min<std::int64_t>(levels, kExactLevels);
  for (std::int64_t n = 1; n <= exact; ++n) strata.push_back({n, n, schedule.holding(n)});
  for (std::int64_t lo = exact + 1; lo <= levels; lo *= 2) {
    const std::int64_t hi = std::min(levels, 2 * lo - 1);
    strata.push_back({lo, hi, holding_block_sum(s, lo, hi)});
  }

  std::vector<LevelResult> results(strata.size());
  parallel_for(strata.size(), options.workers, [&](std::size_t idx) {
    const Stratum& st = strata[idx];
    RngStream stream = rng.split(static_cast<std::uint64_t>(st.lo));
    const auto draws = allocation(st.weight);
    // Proposal q_n proportional to 1/(n(n+1)) on [lo, hi], accepted with
    // probability r_n / r_max where r_n = (n+1)/(n+s-1).
    const double inv_lo = 1.0 / static_cast<double>(st.lo);
    const double span = inv_lo - 1.0 / static_cast<double>(st.hi + 1);
    auto ratio = [s](std::int64_t n) { return (n + 1.0) / (n + s - 1.0); };
    const double r_max = std::max(ratio(st.lo), ratio(st.hi));
    auto draw_level = [&]() -> std::int64_t {
      if (st.lo == st.hi) return st.lo;
      while (true) {
        const double t = inv_lo - stream.uniform() * span;
        auto n = static_cast<std::int64_t>(std::ceil(1.0 / t)) - 1;
        n = std::clamp(n, st.lo, st.hi);
        if (stream.uniform() * r_max <= ratio(n)) return n;
      }
    };
    std::vector<std::int64_t> counts(probs.size());
    std::vector<double> logg(k + e), vals(k + e), z(d);
    double sum = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < draws; ++t) {
      const std::int64_t n = draw_level();
      multinomial_variate(stream, n, probs, counts);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        logg[j] = log_gamma_variate(stream, a[j] + static_cast<double>(counts[e + j]));
        mx = std::max(mx, logg[j]);
      }
      for (std::size_t q = 0; q < e; ++q) {
        logg[k + q] = counts[q] > 0 ? log_gamma_variate(stream, static_cast<double>(counts[q]))
                                    : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, logg[k + q]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < k + e; ++j) {
        vals[j] = std::exp(logg[j] - mx);
        total += vals[j];
      }
      double v = 0.0;
      for (std::size_t config = 0; config < (std::size_t{1} << e); ++config) {
        for (std::size_t i = 0; i < d; ++i) z[i] = vals[i] / total;
        int ups = 0;
        for (std::size_t q = 0; q < e; ++q) {
          if (config >> q & 1U) {
            z[moves[q].to] += vals[k + q] / total;
            ++ups;
          }
        }
        const double sign = (static_cast<int>(e) - ups) % 2 ? -1.0 : 1.0;
        v += sign * h(z);
      }
      if (e == 0) v -= eh;
      sum += v;
      sq += v * v;
    }
    const double m = static_cast<double>(draws);
    const double mean = sum / m;
    const double var = std::max(0.0, (sq - m * mean * mean) / (m - 1.0));
    results[idx] = {mean, var / m};
  });

  double est = 0.0, var = 0.0;
  for (std::size_t idx = 0; idx < strata.size(); ++idx) {
    est += strata[idx].weight * results[idx].mean;
    var += strata[idx].weight * strata[idx].weight * results[idx].var_of_mean;
  }
  SteinEstimate out;
  out.value = -0.5 * est;
  out.stderr_ = 0.5 * std::sqrt(var);
  const double m = static_cast<double>(schedule.levels);
  if (e == 0) {
    out.truncation = h.centered_sup(eh) * schedule.tail;
  } else if (e == 1) {
    out.truncation = moves[0].eps * h.norms().h1 / (m + s);
  } else {
    out.truncation = moves[0].eps * moves[1].eps * h.norms().h2 / (m + s + 1.0);
  }
  return out;
}

}  // namespace

SteinEstimate solve_stein_f(const DirichletParams& a, const TestFunction& h, double eh,
                            const SimplexPoint& x, const DeathProcessSchedule& schedule,
                            const SteinOptions& options, const RngStream& rng) {
  return level_sum(a, h, eh, x, {}, schedule, options, rng);
}

SteinEstimate stein_f_difference(const DirichletParams& a, const TestFunction& h,
                                 const SimplexPoint& x, std::size_t i, double eps,
                                 const DeathProcessSchedule& schedule, const SteinOptions& options,
                                 const RngStream& rng) {
  return level_sum(a, h, 0.0, x, {{eps, i}}, schedule, options, rng);
}

SteinEstimate stein_f_second_difference(const DirichletParams& a, const TestFunction& h,
                                        const SimplexPoint& x, std::size_t i, std::size_t j,
                                        double eps_i, double eps_j,
                                        const DeathProcessSchedule& schedule,
                                        const SteinOptions& options, const RngStream& rng) {
  return level_sum(a, h, 0.0, x, {{eps_i, i}, {eps_j, j}}, schedule, options, rng);
}

SolutionBoundReport verify_solution_bounds(const DirichletParams& a, const TestFunction& h,
                                           const std::vector<SimplexPoint>& grid,
                                           const DeathProcessSchedule& schedule,
                                           const SteinOptions& options, const RngStream& rng,
                                           double eps) {
  if (!(eps > 0.0)) fail(ErrorCode::kInvalidArgument, "difference step must be positive");
  SolutionBoundReport r;
  const double s = a.s();
  const auto eh = h.expectation(a);
  r.s = s;
  r.eh = eh.value;
  r.centered_sup = h.centered_sup(eh.value);
  r.sup_budget = (s + 1.0) / s * r.centered_sup;
  r.lip1_budget = h.norms().h1 / s;
  r.lip2_budget = h.norms().h2 / (2.0 * (s + 1.0));
  const std::size_t d = a.dim() - 1;
  constexpr double kRound = 1e-12;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& x = grid[g];
    const RngStream base = rng.split(g);
    const auto f = solve_stein_f(a, h, eh.value, x, schedule, options, base.split(0));
    r.f_values.push_back(f);
    r.sup_f = std::max(r.sup_f, std::abs(f.value));
    const double f_low = std::abs(f.value) - 4.0 * f.stderr_ - f.truncation;
    r.sup_f_slack = std::max(r.sup_f_slack, f_low);
    if (f_low > r.sup_budget + kRound) r.sup_pass = false;
    for (std::size_t i = 0; i < d; ++i) {
      if (x.last() - eps < 0.0) break;
      const auto df = stein_f_difference(a, h, x, i, eps, schedule, options, base.split(1 + i));
      r.lip1 = std::max(r.lip1, std::abs(df.value) / eps);
      const double low = (std::abs(df.value) - 4.0 * df.stderr_ - df.truncation) / eps;
      r.lip1_slack = std::max(r.lip1_slack, low);
      if (low > r.lip1_budget + kRound) r.lip1_pass = false;
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        if (x.last() - 2.0 * eps < 0.0) continue;
        const auto d2 = stein_f_second_difference(a, h, x, i, j, eps, eps, schedule, options,
                                                  base.split(1 + d + i * d + j));
        r.lip2 = std::max(r.lip2, std::abs(d2.value) / (eps * eps));
        const double low = (std::abs(d2.value) - 4.0 * d2.stderr_ - d2.truncation) / (eps * eps);
        r.lip2_slack = std::max(r.lip2_slack, low);
        if (low > r.lip2_budget + kRound) r.lip2_pass = false;
      }
    }
  }
  return r;
}

SteinEstimate stein_equation_residual(const DirichletParams& a, const TestFunction& h, double eh,
                                      const SimplexPoint& x, double eps,
                                      const DeathProcessSchedule& schedule,
                                      const SteinOptions& options, const RngStream& rng) {
  const std::size_t d = a.dim() - 1;
  if (x.dim() != a.dim()) fail(ErrorCode::kDimension, "point and parameter dimensions differ");
  for (std::size_t i = 0; i < d; ++i) {
    if (x[i] < eps) fail(ErrorCode::kDomain, "point too close to the boundary for the stencil");
  }
  if (x.last() < 2.0 * eps) fail(ErrorCode::kDomain, "point too close to the boundary for the stencil");
  const double s = a.s();
  double value = 0.0, var = 0.0, trunc = 0.0;
  std::uint64_t stream = 0;
  auto shifted = [&](std::vector<double> shift) {
    std::vector<double> c(x.coords().begin(), x.coords().end());
    for (std::size_t q = 0; q < d; ++q) c[q] += shift[q];
    return SimplexPoint(std::move(c));
  };
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> sh(d, 0.0);
    sh[i] = -eps;
    const auto g = stein_f_difference(a, h, shifted(sh), i, 2.0 * eps, schedule, options,
                                      rng.split(stream++));
    const double coef = (a[i] - s * x[i]) / (2.0 * eps);
    value += coef * g.value;
    var += coef * coef * g.stderr_ * g.stderr_;
    trunc += std::abs(coef) * g.truncation;
    for (std::size_t j = i; j < d; ++j) {
      std::vector<double> sh2(d, 0.0);
      if (i == j) {
        sh2[i] = -eps;
      } else {
        sh2[i] = -0.5 * eps;
        sh2[j] = -0.5 * eps;
      }
      const auto h2 = stein_f_second_difference(a, h, shifted(sh2), i, j, eps, eps, schedule,
                                                options, rng.split(stream++));
      const double mult = i == j ? x[i] * (1.0 - x[i]) : -2.0 * x[i] * x[j];
      const double c2 = mult / (eps * eps);
      value += c2 * h2.value;
      var += c2 * c2 * h2.stderr_ * h2.stderr_;
      trunc += std::abs(c2) * h2.truncation;
    }
  }
  return {value - (h(x.coords()) - eh), std::sqrt(var), trunc};
}

PairBoundEstimate exchangeable_pair_bound(const PairModel& model, std::span<const double> states,
                                          const Eigen::MatrixXd& lambda, const DirichletParams& a,
                                          const PairBoundOptions& options, const RngStream& rng) {
  const std::size_t d = model.dim;
  if (d + 1 != a.dim()) fail(ErrorCode::kDimension, "pair dimension must be K-1");
  if (static_cast<std::size_t>(lambda.rows()) != d || static_cast<std::size_t>(lambda.cols()) != d) {
    fail(ErrorCode::kDimension, "Lambda must be (K-1) x (K-1)");
  }
  if (!model.draw_next) fail(ErrorCode::kInvalidArgument, "pair model needs draw_next");
  if (options.inner < 2) fail(ErrorCode::kInvalidArgument, "nested Monte Carlo needs inner >= 2");
  if (states.empty() || states.size() % d != 0) {
    fail(ErrorCode::kDimension, "outer states must be a non-empty multiple of K-1 values");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lambda);
  if (!lu.isInvertible()) fail(ErrorCode::kDomain, "Lambda is singular");
  const Eigen::MatrixXd inv = lu.inverse();
  bool scalar = true;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j && lambda(i, j) != 0.0) scalar = false;
      if (i == j && lambda(i, i) != lambda(0, 0)) scalar = false;
    }
  }
  std::vector<double> colsum(d, 0.0);
  for (std::size_t m = 0; m < d; ++m) {
    for (std::size_t i = 0; i < d; ++i) colsum[m] += std::abs(inv(i, m));
  }
  const double s = a.s();
  const bool hook_second = options.use_hooks && static_cast<bool>(model.cond_second);
  const bool hook_rem = options.use_hooks && static_cast<bool>(model.remainder);
  const std::size_t outer = states.size() / d;
  std::vector<double> c1(outer), c2(outer), c3(outer);

  parallel_for(outer, options.workers, [&](std::size_t o) {
    RngStream stream = rng.split(o);
    const std::span<const double> w = states.subspan(o * d, d);
    std::vector<double> next(d), delta(d), mean(d, 0.0), second(d * d, 0.0), rem(d);
    double a3 = 0.0;
    for (std::size_t r = 0; r < options.inner; ++r) {
      model.draw_next(w, stream, next);
      double l1 = 0.0, weighted = 0.0;
      for (std::size_t m = 0; m < d; ++m) {
        delta[m] = next[m] - w[m];
        l1 += std::abs(delta[m]);
        weighted += colsum[m] * std::abs(delta[m]);
        mean[m] += delta[m];
      }
      a3 += weighted * l1 * l1;
      if (!hook_second) {
        for (std::size_t m = 0; m < d; ++m) {
          for (std::size_t j = 0; j < d; ++j) second[m * d + j] += delta[m] * delta[j];
        }
      }
    }
    const double inner = static_cast<double>(options.inner);
    for (auto& v : mean) v /= inner;
    if (hook_second) {
      model.cond_second(w, second);
    } else {
      for (auto& v : second) v /= inner;
    }
    if (hook_rem) {
      model.remainder(w, rem);
    } else {
      for (std::size_t m = 0; m < d; ++m) {
        double lin = 0.0;
        for (std::size_t i = 0; i < d; ++i) lin += lambda(m, i) * (a[i] - s * w[i]);
        rem[m] = mean[m] - lin;
      }
    }
    double v1 = 0.0, v2 = 0.0;
    for (std::size_t m = 0; m < d; ++m) {
      v1 += colsum[m] * std::abs(rem[m]);
      for (std::size_t i = 0; i < d; ++i) {
        const double wt = std::abs(inv(i, m));
        if (wt == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) {
          const double drift = lambda(m, i) * w[i] * ((i == j ? 1.0 : 0.0) - w[j]);
          v2 += wt * std::abs(drift - 0.5 * second[m * d + j]);
        }
      }
    }
    c1[o] = v1;
    c2[o] = v2;
    c3[o] = a3 / inner;
  });

  auto summarize = [&](const std::vector<double>& v, double& mean, double& se) {
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1) /
                                  static_cast<double>(v.size()))
                      : 0.0;
  };
  PairBoundEstimate out;
  summarize(c1, out.a1, out.a1_stderr);
  summarize(c2, out.a2, out.a2_stderr);
  summarize(c3, out.a3, out.a3_stderr);
  out.constant = scalar ? 18.0 : 6.0;
  out.coeff_h1 = out.a1 / s;
  out.coeff_h2 = out.a2 / (2.0 * (s + 1.0));
  out.coeff_h21 = out.a3 / (out.constant * (s + 2.0));
  const auto th = theta_exponent(a);
  out.theta = th.theta;
  out.convex_rate = th.convex_rate;
  out.convex_value = std::pow(out.a1 + out.a2 + out.a3, th.convex_rate);
  return out;
}

}  // namespace dirapprox
