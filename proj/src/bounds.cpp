#include "dirapprox/bounds.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "dirapprox/error.hpp"

namespace dirapprox {
namespace {

void fill_common(BoundReport& r, const DirichletParams& a) {
  r.k = a.dim();
  r.a.assign(a.a().begin(), a.a().end());
  r.s = a.s();
  const auto th = theta_exponent(a);
  r.theta = th.theta;
  r.convex_rate = th.convex_rate;
  r.convex_value = std::pow(r.a1 + r.a2 + r.a3, th.convex_rate);
}

}  // namespace

BoundReport theorem1_bound(const MutationSummary& summary, const DirichletParams& a,
                           int population) {
  if (population < 1) fail(ErrorCode::kInvalidArgument, "population N must be positive");
  const double n = population;
  const double k = static_cast<double>(a.dim());
  const double tau = summary.tau, mu = summary.mu;
  BoundReport r;
  r.theorem = "theorem1";
  r.population = population;
  r.inputs = {{"tau", tau}, {"mu", mu}};
  r.a1 = 2.0 * n * (k + 1.0) * tau;
  r.a2 = n * k * k * mu * mu + 2.0 * k * mu;
  r.a3 = 8.0 * n * k * k * k * mu * mu * mu + 16.0 * std::sqrt(2.0) * k * k * k / std::sqrt(n);
  fill_common(r, a);
  r.coeff_h1 = r.a1 / r.s;
  r.coeff_h2 = r.a2 / (2.0 * (r.s + 1.0));
  r.coeff_h21 = r.a3 / (18.0 * (r.s + 2.0));
  return r;
}

std::vector<Rational> pim_pi_for(const std::vector<Rational>& a, const Rational& alpha,
                                 int population) {
  if (population < 2) fail(ErrorCode::kInvalidArgument, "population N must be at least 2");
  std::vector<Rational> pi;
  for (const auto& ai : a) pi.push_back(ai * alpha / (2 * Rational(population - 1)));
  return pi;
}

Theorem2Exact theorem2_exact(const ExactOffspringMoments& mom, const std::vector<Rational>& pi,
                             int population) {
  if (population < 4) fail(ErrorCode::kInvalidArgument, "N >= 4 required by the Cannings bound");
  if (mom.alpha <= 0) fail(ErrorCode::kDegenerate, "offspring law is degenerate (alpha = 0)");
  if (pi.size() < 2) fail(ErrorCode::kDimension, "need K >= 2 mutation probabilities");
  for (std::size_t j = 0; j < pi.size(); ++j) {
    if (pi[j] <= 0) {
      fail(ErrorCode::kDomain, "pi" + std::to_string(j + 1) + " must be positive");
    }
  }
  const Rational n = population;
  const Rational k = static_cast<int>(pi.size());
  Theorem2Exact out;
  for (const auto& p : pi) {
    out.a.push_back(2 * (n - 1) * p / mom.alpha);
    out.s += out.a.back();
  }
  out.eta = out.s * n / (2 * (n - 1));
  const Rational& eta = out.eta;
  out.alpha_over_n = mom.alpha / n;
  const Rational& r = out.alpha_over_n;
  out.a2 = r * r * eta * eta * k * k + r * (eta * eta * (k * k + 1) + 2 * eta * k * k) +
           3 * eta * k / n;
  out.beta_gamma_radicand = 12 * mom.beta / (mom.alpha * n) + 24 * mom.gamma / (mom.alpha * n);
  out.last_radicand = 3 * eta * eta * r + eta / n;
  using ld = long double;
  const ld etad = to_double(eta);
  const ld rd = to_double(r);
  const ld nd = population;
  const ld kd = to_double(k);
  const ld first = 1.0L + etad * std::sqrt(rd) + std::sqrt(etad / nd);
  const ld second = etad * std::pow(rd, 0.75L) +
                    std::pow(static_cast<ld>(to_double(out.beta_gamma_radicand)), 0.25L) +
                    std::pow(static_cast<ld>(to_double(out.last_radicand)), 0.25L) / std::sqrt(nd);
  out.a3 = static_cast<double>(2.0L * kd * kd * kd * first * second * second);
  return out;
}

namespace {

BoundReport theorem2_from_exact(const ExactOffspringMoments& mom, const std::vector<double>& pi,
                                int population) {
  std::vector<Rational> pi_exact;
  for (double p : pi) pi_exact.push_back(exact_rational(p));
  const auto ex = theorem2_exact(mom, pi_exact, population);
  std::vector<double> a;
  for (const auto& v : ex.a) a.push_back(to_double(v));
  const DirichletParams params(a);
  BoundReport r;
  r.theorem = "theorem2";
  r.population = population;
  const auto d = mom.to_double();
  r.inputs = {{"alpha", d.alpha},
              {"beta", d.beta},
              {"gamma", d.gamma},
              {"eta", to_double(ex.eta)},
              {"beta_gamma_radicand", to_double(ex.beta_gamma_radicand)}};
  r.a1 = 0.0;
  r.a2 = to_double(ex.a2);
  r.a3 = ex.a3;
  fill_common(r, params);
  r.coeff_h1 = 0.0;
  r.coeff_h2 = r.a2 / (2.0 * (r.s + 1.0));
  r.coeff_h21 = r.a3 / (18.0 * (r.s + 2.0));
  return r;
}

}  // namespace

BoundReport theorem2_bound(const OffspringMoments& mom, const std::vector<double>& pi,
                           int population) {
  ExactOffspringMoments ex;
  ex.alpha = exact_rational(mom.alpha);
  ex.beta = exact_rational(mom.beta);
  ex.gamma = exact_rational(mom.gamma);
  ex.delta = exact_rational(mom.delta);
  return theorem2_from_exact(ex, pi, population);
}

BoundReport theorem2_bound(const OffspringModel& model, const std::vector<double>& pi) {
  return theorem2_from_exact(exact_moments(model), pi, model.population());
}

BoundReport theorem4_bound(const DirichletParams& a, std::int64_t draws) {
  if (draws < 1) fail(ErrorCode::kInvalidArgument, "the urn needs n >= 1 draws");
  const double n = static_cast<double>(draws);
  const double k = static_cast<double>(a.dim());
  const double s = a.s();
  BoundReport r;
  r.theorem = "theorem4";
  r.population = static_cast<int>(std::min<std::int64_t>(draws, 2147483647));
  r.inputs = {{"n", n}};
  r.a1 = 0.0;
  r.a2 = 2.0 * s / n;
  r.a3 = (k - 1.0) * (3.0 * k - 5.0) * (n + s - 1.0) / (n * n);
  fill_common(r, a);
  r.coeff_h1 = 0.0;
  r.coeff_h2 = s / (n * (s + 1.0));
  r.coeff_h21 = (k - 1.0) * (3.0 * k - 5.0) * (n + s - 1.0) / (18.0 * n * n * (s + 2.0));
  return r;
}

LemmaBudgets lemma_budgets_wf(const MutationSummary& summary, int population) {
  if (population < 1) fail(ErrorCode::kInvalidArgument, "population N must be positive");
  if (summary.sigma_j.size() != summary.tau_j.size()) {
    fail(ErrorCode::kDimension, "sigma_j and tau_j lengths differ");
  }
  const double n = population;
  const double rn = std::sqrt(n);
  const std::size_t d = summary.sigma_j.size();
  LemmaBudgets b;
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double ui = summary.sigma_j[i] + summary.tau_j[i];
    for (std::size_t j = 0; j < d; ++j) {
      const double uj = summary.sigma_j[j] + summary.tau_j[j];
      b.a2 += n * ui * (uj + 2.0 / n);
    }
    sum_a += std::sqrt(2.0) + rn * ui;
    sum_b += 1.0 + rn * ui;
  }
  b.a3 = 2.0 / rn * sum_a * sum_a * sum_b;
  return b;
}

Rational rho_exact(const ExactOffspringMoments& mom, int population) {
  if (population < 4) fail(ErrorCode::kInvalidArgument, "rho needs N >= 4");
  const Rational n = population;
  const Rational n2 = n * n, n4 = n2 * n2;
  return n2 * mom.beta / (2 * (n - 1)) + 3 * n4 * mom.gamma / ((n - 2) * (n - 3)) +
         (4 * n4 + 3 * n2) * mom.delta / ((n - 1) * (n - 2) * (n - 3));
}

double rho_budget(const OffspringMoments& mom, int population) {
  ExactOffspringMoments ex;
  ex.alpha = exact_rational(mom.alpha);
  ex.beta = exact_rational(mom.beta);
  ex.gamma = exact_rational(mom.gamma);
  ex.delta = exact_rational(mom.delta);
  return to_double(rho_exact(ex, population));
}

std::string bound_report_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["theorem"] = r.theorem;
  j["N"] = r.population;
  j["K"] = r.k;
  j["a"] = r.a;
  j["s"] = r.s;
  for (const auto& [key, value] : r.inputs) j["inputs"][key] = value;
  j["A1"] = r.a1;
  j["A2"] = r.a2;
  j["A3"] = r.a3;
  j["coeff_h1"] = r.coeff_h1;
  j["coeff_h2"] = r.coeff_h2;
  j["coeff_h21"] = r.coeff_h21;
  j["theta"] = r.theta;
  j["convex_rate"] = r.convex_rate;
  j["convex_value"] = r.convex_value;
  j["convex_note"] = r.convex_note;
  return j.dump(2);
}

}  // namespace dirapprox
