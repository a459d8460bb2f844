#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirapprox/rng.hpp"
#include "dirapprox/simplex.hpp"

namespace dirapprox {

/// Polynomial in the K-1 free simplex coordinates.
class Polynomial {
 public:
  explicit Polynomial(std::size_t dim) : dim_(dim) {}
  static Polynomial monomial(std::vector<int> exponents, double coeff = 1.0);
  /// Monomial over all K coordinates, with x_K expanded as 1 - sum(x).
  static Polynomial full_monomial(std::span<const int> exponents);

  std::size_t dim() const noexcept { return dim_; }
  const std::map<std::vector<int>, double>& terms() const noexcept { return terms_; }
  int degree() const;

  void add_term(std::vector<int> exponents, double coeff);
  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial scaled(double c) const;
  Polynomial derivative(std::size_t i) const;

  double operator()(std::span<const double> x) const;
  /// Exact E p(Z) for Z ~ Dir(a) through mixed moments.
  double expectation(const DirichletParams& a) const;

 private:
  std::size_t dim_;
  std::map<std::vector<int>, double> terms_;
};

/// Bounds over the closed simplex. Derivatives are taken in the free
/// coordinates and Lipschitz constants use the L1 norm, so |h|_{2,1} is the
/// largest third partial.
struct Seminorms {
  double sup = 0.0;  // upper bound on h
  double inf = 0.0;  // lower bound on h
  double h1 = 0.0;
  double h2 = 0.0;
  double h21 = 0.0;
};

enum class TestFamily { kConstant, kMonomial, kPolynomial, kCosine, kSine, kBump, kCustom };

struct Expectation {
  double value = 0.0;
  double stderr_ = 0.0;
  bool exact = true;
};

class TestFunction {
 public:
  static TestFunction constant(std::size_t dim, double value);
  /// x^c over the free coordinates.
  static TestFunction monomial(std::vector<int> exponents);
  /// Caller vouches for the seminorms.
  static TestFunction polynomial(std::string tag, Polynomial p, Seminorms norms);
  static TestFunction cosine(std::vector<double> w);
  static TestFunction sine(std::vector<double> w);
  /// (1 - u^2)^3 for |u| < 1, u = (x_coord - center) / radius.
  static TestFunction bump(std::size_t dim, std::size_t coord, double center, double radius);
  static TestFunction custom(std::string tag, std::size_t dim,
                             std::function<double(std::span<const double>)> fn, Seminorms norms);

  double operator()(std::span<const double> x) const { return fn_(x); }
  const std::string& tag() const noexcept { return tag_; }
  std::size_t dim() const noexcept { return dim_; }
  TestFamily family() const noexcept { return family_; }
  const Seminorms& norms() const noexcept { return norms_; }
  const Polynomial* polynomial() const noexcept { return poly_ ? &*poly_ : nullptr; }
  std::span<const double> frequency() const noexcept { return w_; }

  /// E h(Z): exact for every built-in family; custom functions fall back to
  /// Monte Carlo with `mc_samples` draws (rng required).
  Expectation expectation(const DirichletParams& a, RngStream* rng = nullptr,
                          std::size_t mc_samples = 10'000'000) const;

  /// Bound on sup |h - c| over the simplex.
  double centered_sup(double c) const { return std::max(norms_.sup - c, c - norms_.inf); }

 private:
  TestFunction() = default;

  std::string tag_;
  std::size_t dim_ = 0;
  TestFamily family_ = TestFamily::kCustom;
  Seminorms norms_;
  std::function<double(std::span<const double>)> fn_;
  std::optional<Polynomial> poly_;
  std::vector<double> w_;
  std::size_t coord_ = 0;
  double center_ = 0.0;
  double radius_ = 1.0;
};

/// Largest value of prod x_i^{c_i} on the closed simplex (free coordinates,
/// the implicit one free to absorb the rest).
double monomial_max(std::span<const int> exponents);

/// Monomials of degree 1..3, cos and sin at two frequencies with L1 norm 1
/// and 3, and one bump in the first coordinate.
std::vector<TestFunction> standard_battery(std::size_t dim);

}  // namespace dirapprox
