#pragma once

#include <map>
#include <string>
#include <vector>

#include "dirapprox/mutation.hpp"
#include "dirapprox/offspring.hpp"
#include "dirapprox/rational.hpp"
#include "dirapprox/simplex.hpp"
#include "dirapprox/test_functions.hpp"

namespace dirapprox {

struct BoundReport {
  std::string theorem;
  int population = 0;  // N, or the number of draws for the urn
  std::size_t k = 0;
  std::vector<double> a;
  std::map<std::string, double> inputs;
  double s = 0.0;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double coeff_h1 = 0.0, coeff_h2 = 0.0, coeff_h21 = 0.0;
  double theta = 0.0;
  double convex_rate = 0.0;
  double convex_value = 0.0;  // (A1 + A2 + A3)^rate; the constant is not known
  std::string convex_note = "convex-set distance <= C(a) * convex_value with C(a) unknown";

  double smooth_bound(double h1, double h2, double h21) const {
    return coeff_h1 * h1 + coeff_h2 * h2 + coeff_h21 * h21;
  }
  double smooth_bound(const Seminorms& n) const { return smooth_bound(n.h1, n.h2, n.h21); }
};

/// Wright-Fisher with general mutation: A1 = 2N(K+1) tau, A2 = N K^2 mu^2 + 2 K mu,
/// A3 = 8 N K^3 mu^3 + 16 sqrt(2) K^3 / sqrt(N).
BoundReport theorem1_bound(const MutationSummary& summary, const DirichletParams& a,
                           int population);

/// Exact pieces of the Cannings PIM bound.
struct Theorem2Exact {
  std::vector<Rational> a;
  Rational s;
  Rational eta;
  Rational alpha_over_n;
  Rational a2;
  Rational beta_gamma_radicand;  // 12 beta/(alpha N) + 24 gamma/(alpha N)
  Rational last_radicand;        // 3 eta^2 alpha/N + eta/N
  double a3 = 0.0;
};

/// Throws kInvalidArgument for N < 4, kDegenerate for alpha = 0, kDomain for
/// a non-positive pi.
Theorem2Exact theorem2_exact(const ExactOffspringMoments& mom, const std::vector<Rational>& pi,
                             int population);
/// pi_i = a_i alpha / (2 (N - 1)), the mutation vector giving parameters a.
std::vector<Rational> pim_pi_for(const std::vector<Rational>& a, const Rational& alpha,
                                 int population);

BoundReport theorem2_bound(const OffspringMoments& mom, const std::vector<double>& pi,
                           int population);
BoundReport theorem2_bound(const OffspringModel& model, const std::vector<double>& pi);

/// Polya urn after n draws: coefficients s/(n(s+1)) on |h|_2 and
/// (K-1)(3K-5)(n+s-1)/(18 n^2 (s+2)) on |h|_{2,1}.
BoundReport theorem4_bound(const DirichletParams& a, std::int64_t draws);

struct LemmaBudgets {
  double a2 = 0.0;  // N sum (sigma_i + tau_i)(sigma_j + tau_j + 2/N)
  double a3 = 0.0;  // (2/sqrt N)(sum [sqrt2 + sqrt N (tau_i + sigma_i)])^2 (sum [1 + sqrt N (...)])
};

LemmaBudgets lemma_budgets_wf(const MutationSummary& summary, int population);

/// rho = N^2 beta/(2(N-1)) + 3 N^4 gamma/((N-2)(N-3)) + (4N^4 + 3N^2) delta/((N-1)(N-2)(N-3)).
Rational rho_exact(const ExactOffspringMoments& mom, int population);
double rho_budget(const OffspringMoments& mom, int population);

std::string bound_report_json(const BoundReport& report);

}  // namespace dirapprox
