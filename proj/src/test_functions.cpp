#include "dirapprox/test_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dirapprox/error.hpp"
#include "dirapprox/special.hpp"
#include "dirapprox/text.hpp"

namespace dirapprox {
namespace {

double binomial_coeff(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

void check_dim(std::size_t dim) {
  if (dim < 1) fail(ErrorCode::kDimension, "test functions need K >= 2");
}

// sup and inf of cos(t) for t in [lo, hi].
std::pair<double, double> cos_range(double lo, double hi) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double hi_val = std::max(std::cos(lo), std::cos(hi));
  const double lo_val = std::min(std::cos(lo), std::cos(hi));
  const bool has_peak = std::floor(hi / kTwoPi) >= std::ceil(lo / kTwoPi);
  const bool has_trough =
      std::floor((hi - std::numbers::pi) / kTwoPi) >= std::ceil((lo - std::numbers::pi) / kTwoPi);
  return {has_peak ? 1.0 : hi_val, has_trough ? -1.0 : lo_val};
}

double sup_abs_cos(double lo, double hi) {
  const auto [sup, inf] = cos_range(lo, hi);
  return std::max(std::abs(sup), std::abs(inf));
}

std::string join_numbers(std::span<const double> w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ";";
    std::ostringstream ss;
    ss << w[i];
    out += ss.str();
  }
  return out;
}

}  // namespace

Polynomial Polynomial::monomial(std::vector<int> exponents, double coeff) {
  Polynomial p(exponents.size());
  p.add_term(std::move(exponents), coeff);
  return p;
}

Polynomial Polynomial::full_monomial(std::span<const int> exponents) {
  if (exponents.size() < 2) fail(ErrorCode::kDimension, "full monomial needs K >= 2 exponents");
  const std::size_t d = exponents.size() - 1;
  std::vector<int> head(exponents.begin(), exponents.end() - 1);
  Polynomial out = monomial(head);
  // (1 - x_1 - ... - x_d)^{c_K}
  Polynomial last(d);
  last.add_term(std::vector<int>(d, 0), 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<int> e(d, 0);
    e[i] = 1;
    last.add_term(e, -1.0);
  }
  for (int r = 0; r < exponents.back(); ++r) out = out * last;
  return out;
}

int Polynomial::degree() const {
  int deg = 0;
  for (const auto& [e, c] : terms_) {
    int total = 0;
    for (int v : e) total += v;
    deg = std::max(deg, total);
  }
  return deg;
}

void Polynomial::add_term(std::vector<int> exponents, double coeff) {
  if (exponents.size() != dim_) fail(ErrorCode::kDimension, "polynomial term has wrong dimension");
  for (int v : exponents) {
    if (v < 0) fail(ErrorCode::kDomain, "negative polynomial exponent");
  }
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.emplace(std::move(exponents), coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.dim_ != dim_) fail(ErrorCode::kDimension, "polynomial dimensions differ");
  Polynomial out = *this;
  for (const auto& [e, c] : o.terms_) out.add_term(e, c);
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.dim_ != dim_) fail(ErrorCode::kDimension, "polynomial dimensions differ");
  Polynomial out(dim_);
  for (const auto& [e1, c1] : terms_) {
    for (const auto& [e2, c2] : o.terms_) {
      std::vector<int> e(dim_);
      for (std::size_t i = 0; i < dim_; ++i) e[i] = e1[i] + e2[i];
      out.add_term(std::move(e), c1 * c2);
    }
  }
  return out;
}

Polynomial Polynomial::scaled(double c) const {
  Polynomial out(dim_);
  for (const auto& [e, v] : terms_) out.add_term(e, v * c);
  return out;
}

Polynomial Polynomial::derivative(std::size_t i) const {
  if (i >= dim_) fail(ErrorCode::kDimension, "derivative index out of range");
  Polynomial out(dim_);
  for (const auto& [e, c] : terms_) {
    if (e[i] == 0) continue;
    auto d = e;
    --d[i];
    out.add_term(std::move(d), c * e[i]);
  }
  return out;
}

double Polynomial::operator()(std::span<const double> x) const {
  if (x.size() != dim_) fail(ErrorCode::kDimension, "polynomial evaluated at wrong dimension");
  double total = 0.0;
  for (const auto& [e, c] : terms_) {
    double v = c;
    for (std::size_t i = 0; i < dim_; ++i) {
      for (int r = 0; r < e[i]; ++r) v *= x[i];
    }
    total += v;
  }
  return total;
}

double Polynomial::expectation(const DirichletParams& a) const {
  if (a.dim() != dim_ + 1) fail(ErrorCode::kDimension, "polynomial and Dirichlet dimensions differ");
  double total = 0.0;
  for (const auto& [e, c] : terms_) total += c * dirichlet_mixed_moment(a, e);
  return total;
}

double monomial_max(std::span<const int> exponents) {
  int total = 0;
  for (int v : exponents) total += v;
  if (total == 0) return 1.0;
  double out = 1.0;
  for (int v : exponents) {
    if (v > 0) out *= std::pow(static_cast<double>(v) / total, v);
  }
  return out;
}

TestFunction TestFunction::constant(std::size_t dim, double value) {
  check_dim(dim);
  TestFunction t;
  t.tag_ = "const(" + format_number(value) + ")";
  t.dim_ = dim;
  t.family_ = TestFamily::kConstant;
  t.norms_ = {value, value, 0.0, 0.0, 0.0};
  t.poly_ = Polynomial::monomial(std::vector<int>(dim, 0), value);
  t.fn_ = [value](std::span<const double>) { return value; };
  return t;
}

TestFunction TestFunction::monomial(std::vector<int> c) {
  check_dim(c.size());
  for (int v : c) {
    if (v < 0) fail(ErrorCode::kDomain, "negative monomial exponent");
  }
  TestFunction t;
  t.dim_ = c.size();
  t.family_ = TestFamily::kMonomial;
  std::string tag;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    if (!tag.empty()) tag += "*";
    tag += "x" + std::to_string(i + 1);
    if (c[i] > 1) tag += "^" + std::to_string(c[i]);
  }
  t.tag_ = tag.empty() ? "1" : tag;
  // Seminorms: every k-th partial is a scaled monomial, maximised on the face x_K = 0.
  auto partial_sup = [&](int order) {
    double best = 0.0;
    std::vector<int> idx(order, 0);
    const std::size_t d = c.size();
    auto rec = [&](auto&& self, int pos, std::size_t from) -> void {
      if (pos == order) {
        auto e = c;
        double coeff = 1.0;
        for (int r = 0; r < order; ++r) {
          coeff *= e[idx[r]];
          if (e[idx[r]] == 0) return;
          --e[idx[r]];
        }
        best = std::max(best, coeff * monomial_max(e));
        return;
      }
      for (std::size_t i = from; i < d; ++i) {
        idx[pos] = static_cast<int>(i);
        self(self, pos + 1, i);
      }
    };
    rec(rec, 0, 0);
    return best;
  };
  t.norms_ = {monomial_max(c), 0.0, partial_sup(1), partial_sup(2), partial_sup(3)};
  t.poly_ = Polynomial::monomial(c);
  t.fn_ = [c](std::span<const double> x) {
    double v = 1.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (int r = 0; r < c[i]; ++r) v *= x[i];
    }
    return v;
  };
  return t;
}

TestFunction TestFunction::polynomial(std::string tag, Polynomial p, Seminorms norms) {
  check_dim(p.dim());
  TestFunction t;
  t.tag_ = std::move(tag);
  t.dim_ = p.dim();
  t.family_ = TestFamily::kPolynomial;
  t.norms_ = norms;
  t.poly_ = p;
  t.fn_ = [p = std::move(p)](std::span<const double> x) { return p(x); };
  return t;
}

TestFunction TestFunction::cosine(std::vector<double> w) {
  check_dim(w.size());
  double lo = 0.0, hi = 0.0, wmax = 0.0;
  for (double v : w) {
    if (!std::isfinite(v)) fail(ErrorCode::kDomain, "frequency must be finite");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    wmax = std::max(wmax, std::abs(v));
  }
  TestFunction t;
  t.tag_ = "cos(" + join_numbers(w) + ")";
  t.dim_ = w.size();
  t.family_ = TestFamily::kCosine;
  const auto [sup, inf] = cos_range(lo, hi);
  // k-th derivative of cos is cos shifted by k*pi/2.
  const double half_pi = std::numbers::pi / 2.0;
  t.norms_ = {sup, inf, wmax * sup_abs_cos(lo + half_pi, hi + half_pi),
              wmax * wmax * sup_abs_cos(lo + 2 * half_pi, hi + 2 * half_pi),
              wmax * wmax * wmax * sup_abs_cos(lo + 3 * half_pi, hi + 3 * half_pi)};
  t.w_ = w;
  t.fn_ = [w](std::span<const double> x) {
    double dot = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) dot += w[i] * x[i];
    return std::cos(dot);
  };
  return t;
}

TestFunction TestFunction::sine(std::vector<double> w) {
  TestFunction t = cosine(w);
  double lo = 0.0, hi = 0.0, wmax = 0.0;
  for (double v : w) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    wmax = std::max(wmax, std::abs(v));
  }
  // sin(t) = cos(t - pi/2).
  const double half_pi = std::numbers::pi / 2.0;
  const auto [sup, inf] = cos_range(lo - half_pi, hi - half_pi);
  t.tag_ = "sin(" + join_numbers(w) + ")";
  t.family_ = TestFamily::kSine;
  t.norms_ = {sup, inf, wmax * sup_abs_cos(lo, hi),
              wmax * wmax * sup_abs_cos(lo + half_pi, hi + half_pi),
              wmax * wmax * wmax * sup_abs_cos(lo + 2 * half_pi, hi + 2 * half_pi)};
  t.fn_ = [w](std::span<const double> x) {
    double dot = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) dot += w[i] * x[i];
    return std::sin(dot);
  };
  return t;
}

TestFunction TestFunction::bump(std::size_t dim, std::size_t coord, double center,
                                double radius) {
  check_dim(dim);
  if (coord >= dim) fail(ErrorCode::kDimension, "bump coordinate out of range");
  if (!(radius > 0.0) || !std::isfinite(center)) {
    fail(ErrorCode::kDomain, "bump needs a finite center and positive radius");
  }
  TestFunction t;
  const double cr[] = {center, radius};
  const auto parts = split(join_numbers(cr), ';');
  t.tag_ = "bump(x" + std::to_string(coord + 1) + ";c=" + parts[0] + ";r=" + parts[1] + ")";
  t.dim_ = dim;
  t.family_ = TestFamily::kBump;
  // b(u) = (1-u^2)^3: max|b'| = 6 u (1-u^2)^2 at u^2 = 1/5, max|b''| = 6 at 0,
  // and b'' is Lipschitz with constant 48 (|b'''| peaks at the edge u = 1).
  const double b1 = 6.0 * std::sqrt(0.2) * 0.64;
  t.norms_ = {1.0, 0.0, b1 / radius, 6.0 / (radius * radius),
              48.0 / (radius * radius * radius)};
  t.coord_ = coord;
  t.center_ = center;
  t.radius_ = radius;
  t.fn_ = [coord, center, radius](std::span<const double> x) {
    const double u = (x[coord] - center) / radius;
    if (std::abs(u) >= 1.0) return 0.0;
    const double v = 1.0 - u * u;
    return v * v * v;
  };
  return t;
}

TestFunction TestFunction::custom(std::string tag, std::size_t dim,
                                  std::function<double(std::span<const double>)> fn,
                                  Seminorms norms) {
  check_dim(dim);
  TestFunction t;
  t.tag_ = std::move(tag);
  t.dim_ = dim;
  t.family_ = TestFamily::kCustom;
  t.norms_ = norms;
  t.fn_ = std::move(fn);
  return t;
}

Expectation TestFunction::expectation(const DirichletParams& a, RngStream* rng,
                                      std::size_t mc_samples) const {
  if (a.dim() != dim_ + 1) fail(ErrorCode::kDimension, "test function and Dirichlet dimensions differ");
  if (poly_) return {poly_->expectation(a), 0.0, true};
  switch (family_) {
    case TestFamily::kCosine:
    case TestFamily::kSine: {
      // E exp(i w.Z) = sum_m i^m E (w.Z)^m / m!, with E (w.Z)^m from mixed moments.
      std::vector<std::size_t> active;
      double wmax = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        if (w_[i] != 0.0) active.push_back(i);
        wmax = std::max(wmax, std::abs(w_[i]));
      }
      double re = 1.0, im = 0.0;
      double scale = 1.0;  // wmax^m / m!
      std::vector<int> e(dim_, 0);
      for (int m = 1; m < 400; ++m) {
        scale *= wmax / m;
        // Sum over compositions of m on the active coordinates.
        double moment = 0.0;
        const std::size_t na = active.size();
        std::vector<int> comp(na, 0);
        auto rec = [&](auto&& self, std::size_t pos, int remaining, double coeff) -> void {
          if (pos + 1 == na) {
            comp[pos] = remaining;
            std::fill(e.begin(), e.end(), 0);
            double c = coeff * std::pow(w_[active[pos]], remaining);
            for (std::size_t q = 0; q < na; ++q) e[active[q]] = comp[q];
            moment += c * dirichlet_mixed_moment(a, e);
            return;
          }
          for (int r = 0; r <= remaining; ++r) {
            comp[pos] = r;
            self(self, pos + 1, remaining - r,
                 coeff * binomial_coeff(remaining, r) * std::pow(w_[active[pos]], r));
          }
        };
        if (na > 0) rec(rec, 0, m, 1.0);
        double term = moment;
        for (int q = 1; q <= m; ++q) term /= q;
        switch (m % 4) {
          case 0: re += term; break;
          case 1: im += term; break;
          case 2: re -= term; break;
          case 3: im -= term; break;
        }
        if (m > 4 && scale < 1e-20) break;
      }
      return {family_ == TestFamily::kCosine ? re : im, 0.0, true};
    }
    case TestFamily::kBump: {
      // E b((Z_c - c)/r) with Z_c ~ Beta(a_c, s - a_c): expand b as a degree-6
      // polynomial in z and integrate against the Beta law on [c-r, c+r].
      const double ac = a[coord_];
      const double bc = a.s() - ac;
      const double lo = std::clamp(center_ - radius_, 0.0, 1.0);
      const double hi = std::clamp(center_ + radius_, 0.0, 1.0);
      if (hi <= lo) return {0.0, 0.0, true};
      // (1-u^2)^3 = 1 - 3u^2 + 3u^4 - u^6 with u = (z - c)/r.
      const double ucoef[7] = {1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0};
      double zcoef[7] = {0, 0, 0, 0, 0, 0, 0};
      for (int k = 0; k <= 6; ++k) {
        if (ucoef[k] == 0.0) continue;
        const double scale_k = ucoef[k] / std::pow(radius_, k);
        for (int j = 0; j <= k; ++j) {
          zcoef[j] += scale_k * binomial_coeff(k, j) * std::pow(-center_, k - j);
        }
      }
      double total = 0.0;
      double ratio = 1.0;  // B(ac+j, bc) / B(ac, bc)
      for (int j = 0; j <= 6; ++j) {
        if (j > 0) ratio *= (ac + j - 1) / (ac + bc + j - 1);
        const double mass = reg_inc_beta(hi, ac + j, bc) - reg_inc_beta(lo, ac + j, bc);
        total += zcoef[j] * ratio * mass;
      }
      return {total, 0.0, true};
    }
    default:
      break;
  }
  if (!rng) fail(ErrorCode::kInvalidArgument, "Monte Carlo expectation needs a random stream");
  if (mc_samples < 2) fail(ErrorCode::kInvalidArgument, "Monte Carlo expectation needs >= 2 samples");
  double sum = 0.0, sq = 0.0;
  for (std::size_t t = 0; t < mc_samples; ++t) {
    const auto z = dirichlet_sample(a, *rng);
    const double v = fn_(z.coords());
    sum += v;
    sq += v * v;
  }
  const double m = static_cast<double>(mc_samples);
  const double mean = sum / m;
  const double var = std::max(0.0, (sq - m * mean * mean) / (m - 1.0));
  return {mean, std::sqrt(var / m), false};
}

std::vector<TestFunction> standard_battery(std::size_t dim) {
  check_dim(dim);
  std::vector<TestFunction> out;
  // Monomials of total degree 1..3.
  std::vector<int> c(dim, 0);
  for (int deg = 1; deg <= 3; ++deg) {
    auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
      if (pos + 1 == dim) {
        c[pos] = remaining;
        out.push_back(TestFunction::monomial(c));
        return;
      }
      for (int r = remaining; r >= 0; --r) {
        c[pos] = r;
        self(self, pos + 1, remaining - r);
      }
    };
    rec(rec, 0, deg);
  }
  std::vector<double> w1(dim, 0.0), w3(dim, 0.0);
  w1[0] = 1.0;
  if (dim == 1) {
    w3[0] = 3.0;
  } else {
    w3[0] = 2.0;
    w3[1] = -1.0;
  }
  out.push_back(TestFunction::cosine(w1));
  out.push_back(TestFunction::sine(w1));
  out.push_back(TestFunction::cosine(w3));
  out.push_back(TestFunction::sine(w3));
  out.push_back(TestFunction::bump(dim, 0, 0.4, 0.3));
  return out;
}

}  // namespace dirapprox
