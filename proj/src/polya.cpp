#include "dirapprox/polya.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dirapprox/error.hpp"
#include "dirapprox/parallel.hpp"
#include "dirapprox/rational.hpp"
#include "dirapprox/variates.hpp"

namespace dirapprox {

namespace {

std::size_t draw_colour(std::span<const std::int64_t> full, std::span<const double> a,
                        RngStream& rng) {
  std::vector<double> w(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) w[c] = static_cast<double>(full[c]) + a[c];
  return categorical_variate(rng, w);
}

std::vector<std::int64_t> full_counts(std::span<const std::int64_t> counts, std::int64_t n) {
  std::vector<std::int64_t> full(counts.begin(), counts.end());
  full.push_back(n - std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
  return full;
}

// Stirling numbers of the second kind S(c, j), c <= 3 in practice.
double stirling2(int c, int j) {
  if (c == 0 && j == 0) return 1.0;
  if (c == 0 || j == 0) return 0.0;
  return j * stirling2(c - 1, j) + stirling2(c - 1, j - 1);
}

// Closed forms of the conditional drift and second moments given W.
double drift_closed(std::span<const double> a, double s, std::int64_t n,
                    std::span<const double> w, std::size_t i) {
  const double nn = static_cast<double>(n);
  return (a[i] - s * w[i]) / (nn * (nn + s - 1.0));
}

double second_closed(std::span<const double> a, double s, std::int64_t n,
                     std::span<const double> w, std::size_t i, std::size_t j) {
  const double nn = static_cast<double>(n);
  double v = -a[i] * w[j] - a[j] * w[i] - 2.0 * nn * w[i] * w[j];
  if (i == j) v += a[i] + (2.0 * nn + s) * w[i];
  return v / (nn * nn * (nn + s - 1.0));
}

}  // namespace

std::vector<double> UrnState::proportions() const {
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    w[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  return w;
}

UrnState simulate_urn(const DirichletParams& a, std::int64_t n, RngStream& rng) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "the urn needs n >= 1 draws");
  const std::size_t k = a.dim();
  std::vector<std::int64_t> full(k, 0);
  UrnState st;
  st.a.assign(a.a().begin(), a.a().end());
  st.n = n;
  for (std::int64_t j = 0; j < n; ++j) {
    const std::size_t c = draw_colour(full, a.a(), rng);
    if (j + 1 == n) {
      st.prev_counts.assign(full.begin(), full.end() - 1);
      st.last_draw = c;
    }
    ++full[c];
  }
  st.counts.assign(full.begin(), full.end() - 1);
  return st;
}

std::pair<std::vector<double>, std::vector<double>> resample_pair(const UrnState& state,
                                                                  RngStream& rng) {
  if (state.n < 1) fail(ErrorCode::kInvalidArgument, "resampling needs at least one draw");
  const auto prev = full_counts(state.prev_counts, state.n - 1);
  const std::size_t redraw = draw_colour(prev, state.a, rng);
  std::vector<double> w = state.proportions();
  std::vector<double> wp = w;
  const double step = 1.0 / static_cast<double>(state.n);
  const std::size_t free = state.a.size() - 1;
  if (redraw != state.last_draw) {
    if (state.last_draw < free) wp[state.last_draw] -= step;
    if (redraw < free) wp[redraw] += step;
  }
  return {std::move(w), std::move(wp)};
}

std::vector<std::int64_t> sample_urn_counts(const DirichletParams& a, std::int64_t n,
                                            RngStream& rng) {
  if (n < 0) fail(ErrorCode::kInvalidArgument, "the urn needs n >= 0 draws");
  const std::size_t k = a.dim();
  std::vector<double> p(k);
  dirichlet_variate(rng, a.a(), p);
  std::vector<std::int64_t> full(k);
  multinomial_variate(rng, n, p, full);
  full.pop_back();
  return full;
}

double urn_moment(const DirichletParams& a, std::int64_t n, std::span<const int> c) {
  const std::size_t free = a.dim() - 1;
  if (c.size() != free) fail(ErrorCode::kDimension, "urn moment exponents need K-1 entries");
  if (n < 1) fail(ErrorCode::kInvalidArgument, "urn moments need n >= 1");
  const double nn = static_cast<double>(n);
  const double s = a.s();
  // E prod X_i^{c_i} = sum_j prod S(c_i, j_i) (n)_{|j|} prod a_i^(j_i) / s^(|j|)
  std::vector<int> j(free, 0);
  double total = 0.0;
  int degree = 0;
  for (int e : c) degree += e;
  while (true) {
    double coeff = 1.0;
    int jt = 0;
    for (std::size_t i = 0; i < free; ++i) {
      coeff *= stirling2(c[i], j[i]);
      jt += j[i];
    }
    if (coeff != 0.0) {
      double term = coeff;
      for (int r = 0; r < jt; ++r) term *= (nn - r) / (s + r);
      for (std::size_t i = 0; i < free; ++i)
        for (int r = 0; r < j[i]; ++r) term *= a[i] + r;
      total += term;
    }
    std::size_t pos = 0;
    while (pos < free && j[pos] == c[pos]) j[pos++] = 0;
    if (pos == free) break;
    ++j[pos];
  }
  return total / std::pow(nn, degree);
}

double urn_expectation(const Polynomial& p, const DirichletParams& a, std::int64_t n) {
  double total = 0.0;
  for (const auto& [e, coeff] : p.terms()) total += coeff * urn_moment(a, n, e);
  return total;
}

PairModel polya_pair_model(const DirichletParams& a, std::int64_t n) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "the urn pair needs n >= 1 draws");
  const std::vector<double> av(a.a().begin(), a.a().end());
  const double s = a.s();
  const std::size_t free = av.size() - 1;
  PairModel m;
  m.dim = free;
  m.draw_next = [av, n, free](std::span<const double> w, RngStream& rng, std::span<double> next) {
    const double nn = static_cast<double>(n);
    std::vector<std::int64_t> full(free + 1);
    std::int64_t used = 0;
    for (std::size_t i = 0; i < free; ++i) {
      full[i] = std::llround(w[i] * nn);
      used += full[i];
    }
    full[free] = n - used;
    std::vector<double> weight(free + 1);
    for (std::size_t c = 0; c <= free; ++c) weight[c] = static_cast<double>(full[c]);
    const std::size_t y = categorical_variate(rng, weight);
    --full[y];
    const std::size_t redraw = draw_colour(full, av, rng);
    std::copy(w.begin(), w.end(), next.begin());
    if (redraw != y) {
      if (y < free) next[y] -= 1.0 / nn;
      if (redraw < free) next[redraw] += 1.0 / nn;
    }
  };
  m.cond_second = [av, s, n, free](std::span<const double> w, std::span<double> out) {
    for (std::size_t i = 0; i < free; ++i)
      for (std::size_t j = 0; j < free; ++j) out[i * free + j] = second_closed(av, s, n, w, i, j);
  };
  m.remainder = [free](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(free), 0.0);
  };
  return m;
}

Eigen::MatrixXd polya_lambda(const DirichletParams& a, std::int64_t n) {
  const double nn = static_cast<double>(n);
  const auto d = static_cast<Eigen::Index>(a.dim() - 1);
  return Eigen::MatrixXd::Identity(d, d) / (nn * (nn + a.s() - 1.0));
}

namespace {

struct Accum {
  Rational mass;
  std::vector<Rational> drift;
  std::vector<Rational> second;
};

PairIdentityReport exact_pair_identities(const DirichletParams& a, std::int64_t n) {
  const std::size_t k = a.dim();
  const std::size_t free = k - 1;
  std::vector<Rational> ar(k);
  Rational s = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ar[c] = exact_rational(a[c]);
    s += ar[c];
  }
  // Law of X(n-1) over full count vectors.
  std::map<std::vector<int>, Rational> dist{{std::vector<int>(k, 0), Rational(1)}};
  for (std::int64_t m = 0; m + 1 < n; ++m) {
    std::map<std::vector<int>, Rational> next;
    const Rational denom = Rational(m) + s;
    for (const auto& [x, p] : dist)
      for (std::size_t c = 0; c < k; ++c) {
        auto y = x;
        ++y[c];
        next[y] += p * (Rational(x[c]) + ar[c]) / denom;
      }
    dist = std::move(next);
  }
  const Rational nr(n);
  const Rational denom = Rational(n - 1) + s;
  std::map<std::vector<int>, Accum> by_state;
  std::vector<Rational> triple(k * k * k);
  for (const auto& [prev, p] : dist) {
    for (std::size_t y = 0; y < k; ++y) {
      const Rational py = p * (Rational(prev[y]) + ar[y]) / denom;
      if (py == 0) continue;
      auto x = prev;
      ++x[y];
      auto& acc = by_state[x];
      if (acc.drift.empty()) {
        acc.drift.assign(free, Rational(0));
        acc.second.assign(free * free, Rational(0));
      }
      acc.mass += py;
      for (std::size_t c = 0; c < k; ++c) {
        const Rational pc = py * (Rational(prev[c]) + ar[c]) / denom;
        if (pc == 0 || c == y) continue;
        // Delta = (e_c - e_y) / n
        auto delta = [&](std::size_t i) -> int { return (i == c) - (i == y); };
        for (std::size_t i = 0; i < free; ++i) {
          if (delta(i) == 0) continue;
          acc.drift[i] += pc * delta(i) / nr;
          for (std::size_t j = 0; j < free; ++j)
            if (delta(j) != 0) acc.second[i * free + j] += pc * delta(i) * delta(j) / (nr * nr);
        }
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j)
            for (std::size_t l = 0; l < k; ++l)
              if (delta(i) && delta(j) && delta(l)) triple[(i * k + j) * k + l] += pc / (nr * nr * nr);
      }
    }
  }
  PairIdentityReport r;
  r.exact = true;
  r.states = by_state.size();
  const Rational scale = Rational(1) / (nr * (nr + s - 1));
  for (const auto& [x, acc] : by_state) {
    std::vector<Rational> w(free);
    for (std::size_t i = 0; i < free; ++i) w[i] = Rational(x[i]) / nr;
    for (std::size_t i = 0; i < free; ++i) {
      const Rational closed = (ar[i] - s * w[i]) * scale;
      const Rational res = acc.drift[i] / acc.mass - closed;
      if (res != 0) r.drift_zero = false;
      r.max_drift_residual = std::max(r.max_drift_residual, std::fabs(to_double(res)));
      for (std::size_t j = 0; j < free; ++j) {
        Rational v = -ar[i] * w[j] - ar[j] * w[i] - 2 * nr * w[i] * w[j];
        if (i == j) v += ar[i] + (2 * nr + s) * w[i];
        const Rational closed2 = v / (nr * nr * (nr + s - 1));
        const Rational res2 = acc.second[i * free + j] / acc.mass - closed2;
        if (res2 != 0) r.second_zero = false;
        r.max_second_residual = std::max(r.max_second_residual, std::fabs(to_double(res2)));
      }
    }
  }
  const Rational cap = Rational(1) / (nr * nr * nr);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l) {
        const Rational& t = triple[(i * k + j) * k + l];
        const bool distinct = i != j && j != l && i != l;
        if (distinct) {
          r.max_triple_distinct = std::max(r.max_triple_distinct, to_double(t));
          if (t != 0) r.triple_ok = false;
        } else {
          r.max_triple = std::max(r.max_triple, to_double(t));
          if (t > cap) r.triple_ok = false;
        }
      }
  return r;
}

PairIdentityReport sampled_pair_identities(const DirichletParams& a, std::int64_t n,
                                           RngStream& rng, std::size_t states) {
  const std::size_t k = a.dim();
  const std::size_t free = k - 1;
  const double nn = static_cast<double>(n);
  const double s = a.s();
  const double denom = nn - 1.0 + s;
  PairIdentityReport r;
  r.exact = false;
  r.states = states;
  std::vector<double> triple(k * k * k, 0.0);
  for (std::size_t t = 0; t < states; ++t) {
    const auto x = full_counts(sample_urn_counts(a, n, rng), n);
    std::vector<double> w(free), drift(free, 0.0), second(free * free, 0.0);
    for (std::size_t i = 0; i < free; ++i) w[i] = static_cast<double>(x[i]) / nn;
    // Given X(n): Y(n) = y w.p. x_y / n, then Y' = c w.p. (x_c - [c = y] + a_c)/(n-1+s).
    for (std::size_t y = 0; y < k; ++y) {
      if (x[y] == 0) continue;
      const double py = static_cast<double>(x[y]) / nn;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == y) continue;
        const double pc = py * (static_cast<double>(x[c]) + a[c]) / denom;
        auto delta = [&](std::size_t i) -> int { return (i == c) - (i == y); };
        for (std::size_t i = 0; i < free; ++i) {
          if (!delta(i)) continue;
          drift[i] += pc * delta(i) / nn;
          for (std::size_t j = 0; j < free; ++j)
            if (delta(j)) second[i * free + j] += pc * delta(i) * delta(j) / (nn * nn);
        }
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j)
            for (std::size_t l = 0; l < k; ++l)
              if (delta(i) && delta(j) && delta(l))
                triple[(i * k + j) * k + l] += pc / (nn * nn * nn) / static_cast<double>(states);
      }
    }
    for (std::size_t i = 0; i < free; ++i) {
      r.max_drift_residual =
          std::max(r.max_drift_residual, std::fabs(drift[i] - drift_closed(a.a(), s, n, w, i)));
      for (std::size_t j = 0; j < free; ++j)
        r.max_second_residual =
            std::max(r.max_second_residual,
                     std::fabs(second[i * free + j] - second_closed(a.a(), s, n, w, i, j)));
    }
  }
  r.drift_zero = r.max_drift_residual == 0.0;
  r.second_zero = r.max_second_residual == 0.0;
  const double cap = 1.0 / (nn * nn * nn);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l) {
        const double t = triple[(i * k + j) * k + l];
        if (i != j && j != l && i != l) {
          r.max_triple_distinct = std::max(r.max_triple_distinct, t);
          if (t != 0.0) r.triple_ok = false;
        } else {
          r.max_triple = std::max(r.max_triple, t);
          if (t > cap * (1.0 + 1e-12)) r.triple_ok = false;
        }
      }
  return r;
}

}  // namespace

PairIdentityReport verify_pair_identities(const DirichletParams& a, std::int64_t n,
                                          RngStream* rng, std::size_t states) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "pair identities need n >= 1");
  if (n <= kMaxExactUrnDraws && a.dim() <= kMaxExactUrnColours)
    return exact_pair_identities(a, n);
  if (!rng) fail(ErrorCode::kInvalidArgument, "sampled pair identities need a random stream");
  if (states == 0) fail(ErrorCode::kInvalidArgument, "sampled pair identities need states >= 1");
  return sampled_pair_identities(a, n, *rng, states);
}

Theorem4Certification certify_theorem4(const DirichletParams& a, std::int64_t n,
                                       const std::vector<TestFunction>& battery,
                                       std::size_t replicates, const RngStream& rng,
                                       int workers) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "certification needs n >= 1 draws");
  const std::size_t free = a.dim() - 1;
  Theorem4Certification cert;
  cert.draws = n;
  cert.bound = theorem4_bound(a, n);

  const bool need_mc = std::any_of(battery.begin(), battery.end(),
                                   [](const TestFunction& h) { return !h.polynomial(); });
  std::vector<double> rows;
  if (need_mc) {
    if (replicates < 2) fail(ErrorCode::kInvalidArgument, "certification needs >= 2 replicates");
    rows.resize(replicates * free);
    parallel_for(replicates, workers, [&](std::size_t r) {
      RngStream stream = rng.split(r);
      const auto x = sample_urn_counts(a, n, stream);
      for (std::size_t i = 0; i < free; ++i)
        rows[r * free + i] = static_cast<double>(x[i]) / static_cast<double>(n);
    });
  }
  for (const auto& h : battery) {
    if (h.dim() != free) fail(ErrorCode::kDimension, "test function " + h.tag() + " has the wrong dimension");
    const double bound = cert.bound.smooth_bound(h.norms());
    RngStream eh_stream = rng.split(replicates + 1);
    const Expectation eh = h.expectation(a, &eh_stream);
    double est = 0.0, se = 0.0;
    if (const Polynomial* p = h.polynomial()) {
      est = urn_expectation(*p, a, n);
    } else {
      double sum = 0.0, sq = 0.0;
      for (std::size_t r = 0; r < replicates; ++r) {
        const double v = h(std::span<const double>(rows.data() + r * free, free));
        sum += v;
        sq += v * v;
      }
      const double m = static_cast<double>(replicates);
      est = sum / m;
      se = std::sqrt(std::max(0.0, (sq - m * est * est) / (m - 1.0)) / m);
    }
    cert.rows.push_back(make_gap(h.tag(), est, se, eh, bound));
    cert.pass = cert.pass && cert.rows.back().pass;
  }
  cert.samples = std::move(rows);
  return cert;
}

}  // namespace dirapprox
