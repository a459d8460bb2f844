#include "dirapprox/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "dirapprox/error.hpp"
#include "dirapprox/text.hpp"
#include "dirapprox/variates.hpp"

namespace dirapprox {
namespace {

Rational falling(const Rational& x, int k) {
  Rational out = 1;
  for (int i = 0; i < k; ++i) out *= x - i;
  return out;
}

Rational rising(const Rational& x, int k) {
  Rational out = 1;
  for (int i = 0; i < k; ++i) out *= x + i;
  return out;
}

BigInt factorial(int n) {
  BigInt out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

void check_population(int population) {
  if (population < 2) fail(ErrorCode::kInvalidArgument, "population N must be at least 2");
}

// Number of distinct orderings of a multiset.
BigInt orderings(const std::vector<int>& multiset) {
  std::map<int, int> counts;
  for (int v : multiset) ++counts[v];
  BigInt out = factorial(static_cast<int>(multiset.size()));
  for (const auto& [value, count] : counts) out /= factorial(count);
  return out;
}

}  // namespace

std::string to_string(OffspringKind kind) {
  switch (kind) {
    case OffspringKind::kWrightFisher: return "wright-fisher";
    case OffspringKind::kMoran: return "moran";
    case OffspringKind::kDirichletMultinomial: return "dirichlet-multinomial";
    case OffspringKind::kTable: return "table";
  }
  return "unknown";
}

std::optional<OffspringKind> parse_offspring_kind(const std::string& name) {
  if (name == "wright-fisher" || name == "wf") return OffspringKind::kWrightFisher;
  if (name == "moran") return OffspringKind::kMoran;
  if (name == "dirichlet-multinomial") return OffspringKind::kDirichletMultinomial;
  if (name == "table" || name == "explicit-table") return OffspringKind::kTable;
  return std::nullopt;
}

OffspringModel OffspringModel::wright_fisher(int population) {
  check_population(population);
  return OffspringModel(OffspringKind::kWrightFisher, population);
}

OffspringModel OffspringModel::moran(int population) {
  check_population(population);
  return OffspringModel(OffspringKind::kMoran, population);
}

OffspringModel OffspringModel::dirichlet_multinomial(int population, double phi) {
  check_population(population);
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    fail(ErrorCode::kInvalidArgument, "dirichlet-multinomial phi must be positive");
  }
  OffspringModel m(OffspringKind::kDirichletMultinomial, population);
  m.phi_ = phi;
  return m;
}

OffspringModel OffspringModel::table(int population, std::vector<TableEntry> entries) {
  check_population(population);
  if (entries.empty()) fail(ErrorCode::kInvalidArgument, "offspring table is empty");
  double total = 0.0;
  bool all_ones_only = true;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    auto& entry = entries[e];
    if (static_cast<int>(entry.multiset.size()) != population) {
      fail(ErrorCode::kInvalidArgument, "offspring table row " + std::to_string(e + 1) +
                                            " does not have N entries");
    }
    int sum = 0;
    for (int v : entry.multiset) {
      if (v < 0) {
        fail(ErrorCode::kInvalidArgument,
             "offspring table row " + std::to_string(e + 1) + " has a negative count");
      }
      sum += v;
    }
    if (sum != population) {
      fail(ErrorCode::kInvalidArgument,
           "offspring table row " + std::to_string(e + 1) + " does not sum to N");
    }
    if (!(entry.prob >= 0.0)) {
      fail(ErrorCode::kInvalidArgument,
           "offspring table row " + std::to_string(e + 1) + " has a negative probability");
    }
    std::sort(entry.multiset.begin(), entry.multiset.end(), std::greater<>());
    total += entry.prob;
    const bool ones = std::all_of(entry.multiset.begin(), entry.multiset.end(),
                                  [](int v) { return v == 1; });
    if (!ones && entry.prob > 0.0) all_ones_only = false;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, "offspring table probabilities sum to " +
                                          format_number(total) + ", expected 1");
  }
  if (all_ones_only) {
    fail(ErrorCode::kDegenerate, "offspring table is identically (1,...,1)");
  }
  OffspringModel m(OffspringKind::kTable, population);
  Rational exact_total = 0;
  for (const auto& entry : entries) exact_total += exact_rational(entry.prob);
  double running = 0.0;
  for (const auto& entry : entries) {
    m.exact_probs_.push_back(exact_rational(entry.prob) / exact_total);
    running += entry.prob / total;
    m.cumulative_.push_back(running);
  }
  m.cumulative_.back() = 1.0;
  m.entries_ = std::move(entries);
  return m;
}

OffspringModel OffspringModel::load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open offspring table '" + path + "'");
  std::vector<TableEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto where = path + ":" + std::to_string(line_no);
    const auto sep = body.find(';');
    if (sep == std::string::npos) fail(ErrorCode::kParse, where + ": missing ';'");
    const std::string left = trim(body.substr(0, sep));
    const std::string right = trim(body.substr(sep + 1));
    if (left.rfind("multiset:", 0) != 0) fail(ErrorCode::kParse, where + ": expected 'multiset:'");
    if (right.rfind("prob:", 0) != 0) fail(ErrorCode::kParse, where + ": expected 'prob:'");
    TableEntry entry;
    for (const auto& tok : split(left.substr(9), ',')) {
      entry.multiset.push_back(parse_int(tok, where + " multiset"));
    }
    entry.prob = parse_double(right.substr(5), where + " prob");
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) fail(ErrorCode::kParse, path + ": no table rows");
  const int n = static_cast<int>(entries.front().multiset.size());
  return table(n, std::move(entries));
}

std::string OffspringModel::descriptor() const {
  std::string out = to_string(kind_) + "(N=" + std::to_string(population_);
  if (kind_ == OffspringKind::kDirichletMultinomial) out += ",phi=" + format_number(phi_);
  if (kind_ == OffspringKind::kTable) out += ",rows=" + std::to_string(entries_.size());
  return out + ")";
}

OffspringMoments ExactOffspringMoments::to_double() const {
  return {dirapprox::to_double(alpha), dirapprox::to_double(beta), dirapprox::to_double(gamma),
          dirapprox::to_double(delta)};
}

ExactOffspringMoments exact_moments(const OffspringModel& m) {
  const int n = m.population();
  const Rational big_n = n;
  ExactOffspringMoments out;
  switch (m.kind()) {
    case OffspringKind::kWrightFisher: {
      // V1 ~ Bin(N, 1/N); factorial moments of the multinomial.
      out.alpha = falling(big_n, 2) / (big_n * big_n);
      out.beta = falling(big_n, 3) / (big_n * big_n * big_n);
      out.gamma = falling(big_n, 4) / (big_n * big_n * big_n * big_n);
      out.delta = out.gamma;
      break;
    }
    case OffspringKind::kMoran:
      out.alpha = Rational(2) / big_n;
      break;
    case OffspringKind::kDirichletMultinomial: {
      const Rational phi = exact_rational(m.phi());
      const Rational total = big_n * phi;
      out.alpha = falling(big_n, 2) * rising(phi, 2) / rising(total, 2);
      out.beta = falling(big_n, 3) * rising(phi, 3) / rising(total, 3);
      out.gamma = falling(big_n, 4) * rising(phi, 2) * rising(phi, 2) / rising(total, 4);
      out.delta = falling(big_n, 4) * rising(phi, 4) / rising(total, 4);
      break;
    }
    case OffspringKind::kTable: {
      for (std::size_t e = 0; e < m.entries().size(); ++e) {
        const auto& ms = m.entries()[e].multiset;
        const Rational& p = m.exact_probs()[e];
        Rational f2 = 0, f3 = 0, f4 = 0, f2sq = 0;
        for (int v : ms) {
          const Rational rv = v;
          const Rational v2 = falling(rv, 2);
          f2 += v2;
          f3 += falling(rv, 3);
          f4 += falling(rv, 4);
          f2sq += v2 * v2;
        }
        out.alpha += p * f2 / big_n;
        out.beta += p * f3 / big_n;
        out.delta += p * f4 / big_n;
        out.gamma += p * (f2 * f2 - f2sq) / (big_n * (big_n - 1));
      }
      break;
    }
  }
  return out;
}

OffspringMoments moments(const OffspringModel& m) {
  const auto exact = exact_moments(m);
  if (exact.alpha == 0) {
    fail(ErrorCode::kDegenerate, "offspring law is degenerate (alpha = 0)");
  }
  return exact.to_double();
}

std::array<std::optional<Rational>, 10> closed_form_mixed_moments(const ExactOffspringMoments& m,
                                                                  int population) {
  const Rational n = population;
  const Rational& a = m.alpha;
  const Rational& b = m.beta;
  const Rational& g = m.gamma;
  const Rational& d = m.delta;
  std::array<std::optional<Rational>, 10> out;
  out[0] = 1 + a;
  out[1] = 1 - a / (n - 1);
  out[2] = 1 + 3 * a + b;
  out[4] = 1 + a * (n - 3) / (n - 1) - b / (n - 1);
  out[5] = 1 + a * (2 * n - 5) / (n - 1) - 2 * b / (n - 1) + g;
  out[6] = 1 + 7 * a + 6 * b + d;
  out[9] = 1 + a * (3 * n - 7) / (n - 1) + b * (n - 6) / (n - 1) - d / (n - 1);
  if (population >= 3) {
    out[3] = 1 - 3 * a / (n - 1) + 2 * b / ((n - 1) * (n - 2));
    out[8] = 1 + a * (n - 6) / (n - 1) - b * (2 * n - 8) / ((n - 1) * (n - 2)) - g / (n - 2) +
             d / ((n - 1) * (n - 2));
  }
  if (population >= 4) {
    out[7] = 1 - 6 * a / (n - 1) + 8 * b / ((n - 1) * (n - 2)) + 3 * g / ((n - 2) * (n - 3)) -
             3 * d / ((n - 1) * (n - 2) * (n - 3));
  }
  return out;
}

std::vector<std::pair<std::vector<int>, Rational>> enumerate_law(const OffspringModel& m) {
  const int n = m.population();
  if (n > kMaxEnumeratedPopulation) {
    fail(ErrorCode::kStateSpace, "exact offspring enumeration supports N <= " +
                                     std::to_string(kMaxEnumeratedPopulation));
  }
  const BigInt n_fact = factorial(n);
  const Rational big_n = n;
  Rational wf_norm = 1;
  for (int i = 0; i < n; ++i) wf_norm /= big_n;
  const Rational phi = m.kind() == OffspringKind::kDirichletMultinomial ? exact_rational(m.phi())
                                                                         : Rational(0);
  const Rational dm_norm =
      m.kind() == OffspringKind::kDirichletMultinomial ? rising(big_n * phi, n) : Rational(1);

  std::map<std::vector<int>, Rational> table_prob;
  if (m.kind() == OffspringKind::kTable) {
    for (std::size_t e = 0; e < m.entries().size(); ++e) {
      const auto& ms = m.entries()[e].multiset;
      table_prob[ms] += m.exact_probs()[e] / Rational(orderings(ms));
    }
  }

  std::vector<std::pair<std::vector<int>, Rational>> law;
  std::vector<int> v(n, 0);
  auto pmf = [&](const std::vector<int>& comp) -> Rational {
    switch (m.kind()) {
      case OffspringKind::kWrightFisher: {
        BigInt denom = 1;
        for (int c : comp) denom *= factorial(c);
        return Rational(n_fact, denom) * wf_norm;
      }
      case OffspringKind::kMoran: {
        int twos = 0, zeros = 0, ones = 0;
        for (int c : comp) {
          twos += c == 2;
          zeros += c == 0;
          ones += c == 1;
        }
        if (twos == 1 && zeros == 1 && ones == n - 2) return Rational(1, n * (n - 1));
        return Rational(0);
      }
      case OffspringKind::kDirichletMultinomial: {
        BigInt denom = 1;
        Rational num = 1;
        for (int c : comp) {
          denom *= factorial(c);
          num *= rising(phi, c);
        }
        return Rational(n_fact, denom) * num / dm_norm;
      }
      case OffspringKind::kTable: {
        auto sorted = comp;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        auto it = table_prob.find(sorted);
        return it == table_prob.end() ? Rational(0) : it->second;
      }
    }
    return Rational(0);
  };
  // Depth-first over compositions of n into n ordered parts.
  auto recurse = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n - 1) {
      v[pos] = remaining;
      Rational p = pmf(v);
      if (p != 0) law.emplace_back(v, std::move(p));
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      v[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, n);
  return law;
}

double IdentityReport::max_residual() const {
  double worst = 0.0;
  for (const auto& row : rows) {
    if (!row.skipped) worst = std::max(worst, row.residual);
  }
  return worst;
}

IdentityReport verify_moment_identities(const OffspringModel& m, RngStream& rng,
                                        std::size_t mc_samples) {
  const int n = m.population();
  const auto exact = exact_moments(m);
  const auto rhs = closed_form_mixed_moments(exact, n);
  IdentityReport report;
  report.exact = n <= kMaxEnumeratedPopulation;

  std::array<Rational, 10> lhs_exact;
  std::array<double, 10> lhs_mean{}, lhs_sq{};
  if (report.exact) {
    for (const auto& [v, p] : enumerate_law(m)) {
      for (std::size_t k = 0; k < kIdentityExponents.size(); ++k) {
        const auto& e = kIdentityExponents[k];
        BigInt prod = 1;
        bool feasible = true;
        for (int slot = 0; slot < 4; ++slot) {
          if (e[slot] == 0) continue;
          if (slot >= n) {
            feasible = false;
            break;
          }
          prod *= boost::multiprecision::pow(BigInt(v[slot]), e[slot]);
        }
        if (feasible) lhs_exact[k] += p * Rational(prod);
      }
    }
  } else {
    report.mc_samples = mc_samples;
    std::vector<std::int64_t> v(n);
    for (std::size_t t = 0; t < mc_samples; ++t) {
      sample_offspring(m, rng, v);
      for (std::size_t k = 0; k < kIdentityExponents.size(); ++k) {
        const auto& e = kIdentityExponents[k];
        double prod = 1.0;
        for (int slot = 0; slot < 4; ++slot) {
          for (int r = 0; r < e[slot]; ++r) prod *= static_cast<double>(v[slot]);
        }
        lhs_mean[k] += prod;
        lhs_sq[k] += prod * prod;
      }
    }
  }

  for (std::size_t k = 0; k < kIdentityExponents.size(); ++k) {
    IdentityResidual row;
    row.name = kIdentityNames[k];
    if (!rhs[k]) {
      row.skipped = true;
      report.rows.push_back(row);
      continue;
    }
    if (report.exact) {
      const Rational diff = lhs_exact[k] - *rhs[k];
      row.lhs = to_double(lhs_exact[k]);
      row.rhs = to_double(*rhs[k]);
      row.residual = to_double(abs(diff));
    } else {
      const double count = static_cast<double>(mc_samples);
      const double mean = lhs_mean[k] / count;
      const double var = std::max(0.0, lhs_sq[k] / count - mean * mean);
      row.lhs = mean;
      row.rhs = to_double(*rhs[k]);
      row.residual = std::abs(mean - row.rhs);
      row.stderr_ = std::sqrt(var / count);
    }
    report.rows.push_back(row);
  }
  return report;
}

void sample_offspring(const OffspringModel& m, RngStream& rng, std::span<std::int64_t> out) {
  const int n = m.population();
  if (static_cast<int>(out.size()) != n) {
    fail(ErrorCode::kDimension, "offspring output buffer must have N entries");
  }
  switch (m.kind()) {
    case OffspringKind::kWrightFisher: {
      std::vector<double> probs(n, 1.0);
      multinomial_variate(rng, n, probs, out);
      break;
    }
    case OffspringKind::kMoran: {
      std::fill(out.begin(), out.end(), 1);
      const auto born = uniform_index(rng, n);
      auto dies = uniform_index(rng, n - 1);
      if (dies >= born) ++dies;
      out[born] = 2;
      out[dies] = 0;
      break;
    }
    case OffspringKind::kDirichletMultinomial: {
      std::vector<double> shape(n, m.phi()), weights(n);
      dirichlet_variate(rng, shape, weights);
      multinomial_variate(rng, n, weights, out);
      break;
    }
    case OffspringKind::kTable: {
      const double u = rng.uniform();
      const auto& cum = m.cumulative_;
      std::size_t row = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
      row = std::min(row, cum.size() - 1);
      const auto& ms = m.entries()[row].multiset;
      std::copy(ms.begin(), ms.end(), out.begin());
      for (std::size_t i = out.size() - 1; i > 0; --i) {
        std::swap(out[i], out[uniform_index(rng, i + 1)]);
      }
      break;
    }
  }
}

std::vector<std::int64_t> sample_offspring(const OffspringModel& m, RngStream& rng) {
  std::vector<std::int64_t> out(m.population());
  sample_offspring(m, rng, out);
  return out;
}

std::array<Rational, 4> exact_aggregate_moments(const OffspringModel& m, int x) {
  const int n = m.population();
  if (x < 0 || x > n) {
    fail(ErrorCode::kInvalidArgument, "aggregate size x must lie in [0, N]");
  }
  const auto mixed = closed_form_mixed_moments(exact_moments(m), n);
  const Rational rx = x;
  auto term = [&](int falling_order, std::size_t idx) -> Rational {
    const Rational coeff = falling(rx, falling_order);
    if (coeff == 0) return 0;
    return coeff * *mixed[idx];
  };
  std::array<Rational, 4> out;
  out[0] = rx;
  out[1] = term(1, 0) + term(2, 1);
  out[2] = term(1, 2) + 3 * term(2, 4) + term(3, 3);
  out[3] = term(1, 6) + 4 * term(2, 9) + 3 * term(2, 5) + 6 * term(3, 8) + term(4, 7);
  return out;
}

std::array<double, 4> aggregate_moments(const OffspringModel& m, int x) {
  const auto exact = exact_aggregate_moments(m, x);
  return {to_double(exact[0]), to_double(exact[1]), to_double(exact[2]), to_double(exact[3])};
}

MohleDiagnostics mohle_diagnostics(const OffspringModel& m) {
  const auto mom = moments(m);
  const double n = m.population();
  return {mom.alpha / n, mom.beta / (mom.alpha * n), mom.gamma / (mom.alpha * n)};
}

}  // namespace dirapprox
