#include "dirapprox/distance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "dirapprox/error.hpp"
#include "dirapprox/text.hpp"
#include "dirapprox/variates.hpp"

namespace dirapprox {

GapEstimate make_gap(std::string tag, double estimate, double estimate_stderr,
                     const Expectation& eh, double bound) {
  GapEstimate g;
  g.tag = std::move(tag);
  g.gap = std::fabs(estimate - eh.value);
  g.stderr_ = std::sqrt(estimate_stderr * estimate_stderr + eh.stderr_ * eh.stderr_);
  g.bound = bound;
  g.pass = g.gap - 4.0 * g.stderr_ <= bound + kGapRoundoff;
  return g;
}

namespace {

void check_dim(const TestFunction& h, std::size_t k) {
  if (h.dim() + 1 != k)
    fail(ErrorCode::kDimension, "test function " + h.tag() + " does not match K = " + std::to_string(k));
}

Expectation dirichlet_side(const TestFunction& h, const DirichletParams& a) {
  if (h.family() == TestFamily::kCustom) {
    RngStream rng(0x5eed, 0);
    return h.expectation(a, &rng);
  }
  return h.expectation(a);
}

}  // namespace

GapEstimate smooth_gap(const StationaryRun& sample, const DirichletParams& a,
                       const TestFunction& h, double bound) {
  if (sample.size() == 0) fail(ErrorCode::kInvalidArgument, "smooth gap needs a nonempty sample");
  if (a.dim() != sample.k) fail(ErrorCode::kDimension, "sample and Dirichlet dimensions differ");
  check_dim(h, sample.k);
  const MeanEstimate m = estimate_mean(sample, [&h](std::span<const double> x) { return h(x); });
  return make_gap(h.tag(), m.mean, m.stderr_, dirichlet_side(h, a), bound);
}

GapEstimate smooth_gap(const WeightedSample& law, const DirichletParams& a, const TestFunction& h,
                       double bound) {
  if (law.size() == 0) fail(ErrorCode::kInvalidArgument, "smooth gap needs a nonempty law");
  if (a.dim() != law.k) fail(ErrorCode::kDimension, "law and Dirichlet dimensions differ");
  check_dim(h, law.k);
  double mean = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) mean += law.weights[i] * h(law.point(i));
  return make_gap(h.tag(), mean, 0.0, dirichlet_side(h, a), bound);
}

namespace {

KolmogorovResult kolmogorov_weighted(std::vector<std::pair<double, double>> atoms,
                                     const DirichletParams& a) {
  if (a.dim() != 2) fail(ErrorCode::kDimension, "the Kolmogorov distance needs K = 2");
  if (atoms.empty()) fail(ErrorCode::kInvalidArgument, "the Kolmogorov distance needs a nonempty sample");
  std::sort(atoms.begin(), atoms.end());
  double total = 0.0;
  for (const auto& [x, w] : atoms) total += w;
  KolmogorovResult r;
  r.atoms = atoms.size();
  double below = 0.0;
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double v = atoms[i].first;
    double mass = 0.0;
    while (i < atoms.size() && atoms[i].first == v) mass += atoms[i++].second;
    const double f = reg_inc_beta(std::clamp(v, 0.0, 1.0), a[0], a[1]);
    const double lo = below / total;
    below += mass;
    const double hi = below / total;
    r.distance = std::max({r.distance, std::fabs(lo - f), std::fabs(hi - f)});
  }
  r.interval_bound = 2.0 * r.distance;
  return r;
}

}  // namespace

KolmogorovResult kolmogorov_k2(std::vector<double> values, const DirichletParams& a) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(values.size());
  for (double v : values) atoms.emplace_back(v, 1.0);
  return kolmogorov_weighted(std::move(atoms), a);
}

KolmogorovResult kolmogorov_k2(const StationaryRun& sample, const DirichletParams& a) {
  if (sample.k != 2) fail(ErrorCode::kDimension, "the Kolmogorov distance needs K = 2");
  return kolmogorov_k2(sample.data, a);
}

KolmogorovResult kolmogorov_k2(const WeightedSample& law, const DirichletParams& a) {
  if (law.k != 2) fail(ErrorCode::kDimension, "the Kolmogorov distance needs K = 2");
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < law.size(); ++i) atoms.emplace_back(law.points[i], law.weights[i]);
  return kolmogorov_weighted(std::move(atoms), a);
}

double kolmogorov_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) fail(ErrorCode::kInvalidArgument, "two-sample statistic needs nonempty samples");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

ProbeReference::ProbeReference(const DirichletParams& a, std::size_t size, const RngStream& rng)
    : a_(a) {
  if (a.dim() != 3) fail(ErrorCode::kDimension, "convex probes need K = 3");
  if (size == 0) fail(ErrorCode::kInvalidArgument, "the probe reference needs at least one draw");
  x1_.resize(size);
  x2_.resize(size);
  RngStream stream = rng;
  double z[3];
  for (std::size_t r = 0; r < size; ++r) {
    dirichlet_variate(stream, a.a(), z);
    x1_[r] = z[0];
    x2_[r] = z[1];
  }
}

bool ConvexProbe::contains(double x1, double x2) const {
  if (box) return x1 >= lo1 && x1 <= hi1 && x2 >= lo2 && x2 <= hi2;
  return u1 * x1 + u2 * x2 <= c;
}

std::vector<ConvexProbe> make_probes(const DirichletParams& a, std::size_t n, const RngStream& rng) {
  std::vector<ConvexProbe> probes;
  probes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ConvexProbe p;
    if (i == 0) {
      p.u1 = 1.0;
      p.c = a[0] / a.s();
      probes.push_back(p);
      continue;
    }
    RngStream st = rng.split(1).split(i);
    if (i % 2 == 1) {
      p.box = true;
      double u = st.uniform(), v = st.uniform();
      p.lo1 = std::min(u, v);
      p.hi1 = std::max(u, v);
      u = st.uniform();
      v = st.uniform();
      p.lo2 = std::min(u, v);
      p.hi2 = std::max(u, v);
    } else {
      const double angle = 2.0 * std::numbers::pi * st.uniform();
      p.u1 = std::cos(angle);
      p.u2 = std::sin(angle);
      // Threshold through a uniform point of the simplex.
      double u = st.uniform(), v = st.uniform();
      const double x1 = std::min(u, v), x2 = std::max(u, v) - std::min(u, v);
      p.c = p.u1 * x1 + p.u2 * x2;
    }
    probes.push_back(p);
  }
  return probes;
}

ConvexProbeResult convex_probe_k3(std::span<const double> sample_rows,
                                  const ProbeReference& reference, std::size_t n_probes,
                                  const RngStream& rng) {
  if (sample_rows.empty() || sample_rows.size() % 2 != 0)
    fail(ErrorCode::kDimension, "convex probes need K = 3 sample rows");
  const auto probes = make_probes(reference.params(), n_probes, rng);
  const std::size_t m = sample_rows.size() / 2;
  ConvexProbeResult r;
  r.probes = n_probes;
  for (const auto& p : probes) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < m; ++i) hit += p.contains(sample_rows[2 * i], sample_rows[2 * i + 1]);
    std::size_t ref = 0;
    const auto x1 = reference.x1();
    const auto x2 = reference.x2();
    for (std::size_t i = 0; i < x1.size(); ++i) ref += p.contains(x1[i], x2[i]);
    const double d = std::fabs(static_cast<double>(hit) / static_cast<double>(m) -
                               static_cast<double>(ref) / static_cast<double>(x1.size()));
    r.discrepancies.push_back(d);
    r.lower_bound = std::max(r.lower_bound, d);
  }
  return r;
}

ConvexProbeResult convex_probe_k3(const StationaryRun& sample, const ProbeReference& reference,
                                  std::size_t n_probes, const RngStream& rng) {
  if (sample.k != 3) fail(ErrorCode::kDimension, "convex probes need K = 3");
  return convex_probe_k3(sample.data, reference, n_probes, rng);
}

std::uint64_t state_count(int population, std::size_t k) {
  if (population < 0 || k < 1) return 0;
  // C(N + K - 1, K - 1), saturating.
  const std::uint64_t n = static_cast<std::uint64_t>(population) + k - 1;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i < k; ++i) {
    const std::uint64_t num = n - (k - 1) + i;
    if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    r = r * num / i;
  }
  return r;
}

WeightedSample ExactStationary::law() const {
  WeightedSample w;
  w.k = k;
  w.weights = probs;
  w.points.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    w.points[i] = static_cast<double>(counts[i]) / static_cast<double>(population);
  return w;
}

namespace {

// Dense index of a count vector over its first K-1 entries.
struct StateIndex {
  std::size_t k;
  int n;
  std::vector<std::vector<int>> states;  // full K counts
  std::vector<std::int64_t> lookup;      // radix (N+1)^(K-1)

  StateIndex(std::size_t k_, int n_) : k(k_), n(n_) {
    std::size_t size = 1;
    for (std::size_t i = 0; i + 1 < k; ++i) size *= static_cast<std::size_t>(n + 1);
    lookup.assign(size, -1);
    std::vector<int> x(k, 0);
    enumerate(x, 0, n);
  }
  std::size_t key(const std::vector<int>& x) const {
    std::size_t r = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) r = r * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(x[i]);
    return r;
  }
  std::size_t at(const std::vector<int>& x) const { return static_cast<std::size_t>(lookup[key(x)]); }

 private:
  void enumerate(std::vector<int>& x, std::size_t pos, int left) {
    if (pos + 1 == k) {
      x[pos] = left;
      lookup[key(x)] = static_cast<std::int64_t>(states.size());
      states.push_back(x);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      x[pos] = v;
      enumerate(x, pos + 1, left - v);
    }
  }
};

void compositions(int total, std::size_t k, std::vector<int>& x, std::size_t pos,
                  const std::function<void(const std::vector<int>&)>& fn) {
  if (pos + 1 == k) {
    x[pos] = total;
    fn(x);
    return;
  }
  for (int v = 0; v <= total; ++v) {
    x[pos] = v;
    compositions(total - v, k, x, pos + 1, fn);
  }
}

class MultinomialPmf {
 public:
  explicit MultinomialPmf(int n) : lf_(static_cast<std::size_t>(n) + 1) {
    for (int i = 0; i <= n; ++i) lf_[static_cast<std::size_t>(i)] = std::lgamma(i + 1.0);
  }
  double operator()(const std::vector<int>& x, std::span<const double> q) const {
    int total = 0;
    double lp = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      total += x[c];
      if (x[c] == 0) continue;
      if (q[c] <= 0.0) return 0.0;
      lp += x[c] * std::log(q[c]) - lf_[static_cast<std::size_t>(x[c])];
    }
    return std::exp(lp + lf_[static_cast<std::size_t>(total)]);
  }

 private:
  std::vector<double> lf_;
};

// Law of the next state given the children counts per parent type.
class MutationConvolver {
 public:
  MutationConvolver(const MutationMatrix& p, const StateIndex& idx, const MultinomialPmf& pmf)
      : p_(p), idx_(idx), pmf_(pmf) {}

  const std::vector<std::pair<std::size_t, double>>& law(const std::vector<int>& m) {
    const std::size_t key = idx_.at(m);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const std::size_t k = idx_.k;
    std::map<std::vector<int>, double> dist{{std::vector<int>(k, 0), 1.0}};
    for (std::size_t t = 0; t < k; ++t) {
      if (m[t] == 0) continue;
      std::vector<std::pair<std::vector<int>, double>> part;
      std::vector<int> y(k);
      compositions(m[t], k, y, 0, [&](const std::vector<int>& v) {
        const double pr = pmf_(v, p_.row(t));
        if (pr > 0.0) part.emplace_back(v, pr);
      });
      std::map<std::vector<int>, double> next;
      for (const auto& [x, px] : dist)
        for (const auto& [v, pv] : part) {
          std::vector<int> z(k);
          for (std::size_t c = 0; c < k; ++c) z[c] = x[c] + v[c];
          next[z] += px * pv;
        }
      dist = std::move(next);
    }
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(dist.size());
    for (const auto& [x, px] : dist) out.emplace_back(idx_.at(x), px);
    return cache_.emplace(key, std::move(out)).first->second;
  }

 private:
  const MutationMatrix& p_;
  const StateIndex& idx_;
  const MultinomialPmf& pmf_;
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> cache_;
};

}  // namespace

ExactStationary exact_stationary(const ChainModel& model, std::uint64_t max_states) {
  const std::size_t k = model.dim();
  const int n = model.population;
  if (n < 1) fail(ErrorCode::kInvalidArgument, "population N must be positive");
  if (k < 2) fail(ErrorCode::kDimension, "the chain needs K >= 2 types");
  if (model.offspring && model.offspring->population() != n)
    fail(ErrorCode::kInvalidArgument, "offspring population differs from N");
  const std::uint64_t count = state_count(n, k);
  if (count > max_states)
    fail(ErrorCode::kStateSpace, "exact stationary law needs " + std::to_string(count) +
                                     " states, above the limit of " + std::to_string(max_states));
  check_irreducible(model.mutation);

  const StateIndex idx(k, n);
  const std::size_t S = idx.states.size();
  const MultinomialPmf pmf(n);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));

  const bool direct = !model.offspring;
  const bool wf_offspring = model.offspring && model.offspring->kind() == OffspringKind::kWrightFisher;
  const bool moran = model.offspring && model.offspring->kind() == OffspringKind::kMoran;
  std::vector<std::pair<std::vector<int>, double>> law;
  if (model.offspring && !wf_offspring && !moran) {
    for (const auto& [v, pr] : enumerate_law(*model.offspring)) law.emplace_back(v, to_double(pr));
  }
  MutationConvolver conv(model.mutation, idx, pmf);

  for (std::size_t row = 0; row < S; ++row) {
    const auto& x = idx.states[row];
    const auto r = static_cast<Eigen::Index>(row);
    if (direct) {
      std::vector<std::int64_t> counts(x.begin(), x.end() - 1);
      const auto tp = transition_probs(model.mutation, counts, n);
      for (std::size_t col = 0; col < S; ++col)
        P(r, static_cast<Eigen::Index>(col)) = pmf(idx.states[col], tp.q);
      continue;
    }
    // Children per parent type, then mutation.
    std::map<std::vector<int>, double> children;
    if (moran) {
      const double nn = n;
      for (std::size_t b = 0; b < k; ++b)
        for (std::size_t d = 0; d < k; ++d) {
          const double pr = x[b] * (x[d] - (b == d ? 1.0 : 0.0)) / (nn * (nn - 1.0));
          if (pr <= 0.0) continue;
          auto m = x;
          ++m[b];
          --m[d];
          children[m] += pr;
        }
    } else if (wf_offspring) {
      std::vector<double> q(k);
      for (std::size_t c = 0; c < k; ++c) q[c] = static_cast<double>(x[c]) / n;
      std::vector<int> m(k);
      compositions(n, k, m, 0, [&](const std::vector<int>& v) {
        const double pr = pmf(v, q);
        if (pr > 0.0) children[v] += pr;
      });
    } else {
      for (const auto& [v, pr] : law) {
        std::vector<int> m(k, 0);
        std::size_t slot = 0;
        for (std::size_t c = 0; c < k; ++c)
          for (int j = 0; j < x[c]; ++j) m[c] += v[slot++];
        children[m] += pr;
      }
    }
    for (const auto& [m, pm] : children)
      for (const auto& [col, pc] : conv.law(m)) P(r, static_cast<Eigen::Index>(col)) += pm * pc;
  }

  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(P.rows(), P.cols());
  A.row(A.rows() - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(A.rows());
  b(b.size() - 1) = 1.0;
  Eigen::VectorXd pi = A.partialPivLu().solve(b);
  for (Eigen::Index i = 0; i < pi.size(); ++i) pi(i) = std::max(pi(i), 0.0);
  pi /= pi.sum();

  ExactStationary out;
  out.k = k;
  out.population = n;
  out.residual = (P.transpose() * pi - pi).cwiseAbs().maxCoeff();
  out.probs.assign(pi.data(), pi.data() + pi.size());
  out.counts.reserve(S * (k - 1));
  for (const auto& x : idx.states) out.counts.insert(out.counts.end(), x.begin(), x.end() - 1);
  return out;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::kInvalidArgument, "slope needs two or more paired points");
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) fail(ErrorCode::kDomain, "log-log slope needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  if (den == 0.0) fail(ErrorCode::kDomain, "log-log slope needs distinct x values");
  return (m * sxy - sx * sy) / den;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_gap_csv(const std::vector<GapEstimate>& rows, const std::string& path,
                   const std::string& comment) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot write " + path);
  if (!comment.empty()) f << "# " << comment << "\n";
  f << "h_tag,gap,stderr,bound,pass\n";
  for (const auto& g : rows)
    f << csv_field(g.tag) << ',' << format_number(g.gap) << ',' << format_number(g.stderr_) << ','
      << format_number(g.bound) << ',' << (g.pass ? "true" : "false") << "\n";
  if (!f) fail(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace dirapprox
