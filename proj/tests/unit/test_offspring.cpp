#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dirapprox/error.hpp"
#include "dirapprox/offspring.hpp"
#include "oracles.hpp"

using namespace dirapprox;
using oracle::Q;

namespace {

Q falling(int v, int k) {
  Q r = 1;
  for (int i = 0; i < k; ++i) r *= (v - i);
  return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("dirapprox_unit_" + name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_SUITE("offspring") {

TEST_CASE("Wright-Fisher N=4 factorial moments") {
  const auto m = exact_moments(OffspringModel::wright_fisher(4));
  CHECK(m.alpha == Q(3, 4));
  CHECK(m.beta == Q(3, 8));
  CHECK(m.gamma == Q(3, 32));
  CHECK(m.delta == Q(6, 64));
  // Brute-force multinomial enumeration.
  const auto law = oracle::wf_offspring_law(4);
  CHECK(oracle::law_expect(law, [](const auto& v) { return falling(v[0], 2); }) == m.alpha);
  CHECK(oracle::law_expect(law, [](const auto& v) { return falling(v[0], 3); }) == m.beta);
  CHECK(oracle::law_expect(law, [](const auto& v) { return falling(v[0], 2) * falling(v[1], 2); }) == m.gamma);
  CHECK(oracle::law_expect(law, [](const auto& v) { return falling(v[0], 4); }) == m.delta);
}

TEST_CASE("Moran factorial moments") {
  const auto m = exact_moments(OffspringModel::moran(4));
  CHECK(m.alpha == Q(1, 2));
  CHECK(m.beta == 0);
  CHECK(m.gamma == 0);
  CHECK(m.delta == 0);
  for (int n : {2, 5, 17, 1000}) CHECK(exact_moments(OffspringModel::moran(n)).alpha == Q(2, n));
}

TEST_CASE("Dirichlet-multinomial alpha") {
  const auto m = moments(OffspringModel::dirichlet_multinomial(10, 0.5));
  CHECK(m.alpha == doctest::Approx(10.0 * 9.0 * 0.5 * 1.5 / (5.0 * 6.0)).epsilon(1e-14));
  CHECK(m.beta > 0.0);
  CHECK(m.gamma > 0.0);
}

TEST_CASE("degenerate law is rejected") {
  try {
    OffspringModel::table(4, {{{1, 1, 1, 1}, 1.0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerate);
  }
}

TEST_CASE("mixed moments by enumeration") {
  const auto moran = oracle::moran_offspring_law(4);
  CHECK(oracle::law_expect(moran, [](const auto& v) { return Q(v[0] * v[1]); }) == Q(5, 6));
  CHECK(oracle::law_expect(moran, [](const auto& v) { return Q(v[0] * v[0]); }) == Q(3, 2));
  const auto wf = oracle::wf_offspring_law(4);
  CHECK(oracle::law_expect(wf, [](const auto& v) { return Q(v[0] * v[0] * v[0]); }) == Q(29, 8));
  const auto closed = closed_form_mixed_moments(exact_moments(OffspringModel::moran(4)), 4);
  CHECK(*closed[0] == Q(3, 2));
  CHECK(*closed[1] == Q(5, 6));
  const auto wf_closed = closed_form_mixed_moments(exact_moments(OffspringModel::wright_fisher(4)), 4);
  CHECK(*wf_closed[2] == Q(29, 8));
}

TEST_CASE("library enumeration matches the brute-force laws") {
  for (int n : {3, 4, 5}) {
    auto lib = enumerate_law(OffspringModel::wright_fisher(n));
    auto ref = oracle::wf_offspring_law(n);
    std::sort(lib.begin(), lib.end());
    std::sort(ref.begin(), ref.end());
    REQUIRE(lib.size() == ref.size());
    for (std::size_t i = 0; i < lib.size(); ++i) {
      CHECK(lib[i].first == ref[i].first);
      CHECK(lib[i].second == ref[i].second);
    }
  }
}

TEST_CASE("identities hold exactly for small populations") {
  RngStream rng(1, 1);
  for (int n = 2; n <= 6; ++n) {
    std::vector<OffspringModel> models = {OffspringModel::wright_fisher(n), OffspringModel::moran(n),
                                          OffspringModel::dirichlet_multinomial(n, 0.7)};
    std::vector<int> skewed(n, 0);
    skewed[0] = n;
    std::vector<int> ones(n, 1);
    models.push_back(OffspringModel::table(n, {{skewed, 0.25}, {ones, 0.75}}));
    for (const auto& m : models) {
      const auto r = verify_moment_identities(m, rng);
      CHECK(r.exact);
      CHECK(r.rows.size() == 10);
      CHECK(r.max_residual() < 1e-12);
      if (n >= 4)
        for (const auto& row : r.rows) CHECK_FALSE(row.skipped);
    }
  }
}

TEST_CASE("identities needing four individuals are skipped for N < 4") {
  RngStream rng(1, 2);
  const auto r = verify_moment_identities(OffspringModel::moran(3), rng);
  bool skipped_four = false;
  for (const auto& row : r.rows)
    if (row.name == std::string("E V1 V2 V3 V4")) skipped_four = row.skipped;
  CHECK(skipped_four);
}

TEST_CASE("Monte Carlo identities for larger N") {
  RngStream rng(4, 4);
  const auto r = verify_moment_identities(OffspringModel::dirichlet_multinomial(20, 1.0), rng, 200000);
  CHECK_FALSE(r.exact);
  for (const auto& row : r.rows) CHECK(row.residual <= 5.0 * row.stderr_ + 1e-12);
}

TEST_CASE("samples") {
  RngStream rng(2, 0);
  for (int i = 0; i < 200; ++i) {
    auto v = sample_offspring(OffspringModel::moran(5), rng);
    std::sort(v.begin(), v.end());
    CHECK(v == std::vector<std::int64_t>{0, 1, 1, 1, 2});
  }
  std::vector<double> v1;
  std::int64_t bad = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const auto v = sample_offspring(OffspringModel::wright_fisher(3), rng);
    bad += (v[0] + v[1] + v[2] != 3);
    v1.push_back(static_cast<double>(v[0]));
  }
  CHECK(bad == 0);
  const auto m = oracle::mean_of(v1);
  CHECK(std::fabs(m.mean - 1.0) <= 4.0 * m.stderr_);

  const auto dm = OffspringModel::dirichlet_multinomial(10, 0.5);
  std::vector<double> f2;
  for (int i = 0; i < 1'000'000; ++i) {
    const auto v = sample_offspring(dm, rng);
    std::int64_t sum = 0;
    for (auto x : v) sum += x;
    bad += (sum != 10);
    f2.push_back(static_cast<double>(v[0] * (v[0] - 1)));
  }
  CHECK(bad == 0);
  const auto fm = oracle::mean_of(f2);
  CHECK(std::fabs(fm.mean - 2.25) <= 4.0 * fm.stderr_);
}

TEST_CASE("samples are exchangeable") {
  RngStream rng(2, 9);
  const auto table = OffspringModel::table(4, {{{4, 0, 0, 0}, 0.3}, {{2, 2, 0, 0}, 0.3}, {{1, 1, 1, 1}, 0.4}});
  std::vector<std::vector<double>> cols(4);
  for (int i = 0; i < 400000; ++i) {
    const auto v = sample_offspring(table, rng);
    for (int j = 0; j < 4; ++j) cols[j].push_back(static_cast<double>(v[j] * v[j]));
  }
  const auto m0 = oracle::mean_of(cols[0]);
  for (int j = 1; j < 4; ++j) {
    const auto mj = oracle::mean_of(cols[j]);
    CHECK(std::fabs(mj.mean - m0.mean) <= 4.0 * std::hypot(m0.stderr_, mj.stderr_));
  }
}

TEST_CASE("aggregate moments") {
  for (const auto& m : {OffspringModel::moran(6), OffspringModel::wright_fisher(6),
                        OffspringModel::dirichlet_multinomial(6, 2.0)}) {
    const auto zero = aggregate_moments(m, 0);
    for (double v : zero) CHECK(v == 0.0);
    const auto all = aggregate_moments(m, 6);
    CHECK(all[0] == doctest::Approx(6));
    CHECK(all[1] == doctest::Approx(36));
    CHECK(all[2] == doctest::Approx(216));
    CHECK(all[3] == doctest::Approx(1296));
    const auto one = aggregate_moments(m, 1);
    CHECK(one[1] == doctest::Approx(1.0 + moments(m).alpha).epsilon(1e-14));
  }
  // Moran N=4, x=2 against the 12 ordered (I, J) pairs.
  const auto law = oracle::moran_offspring_law(4);
  const auto ex = exact_aggregate_moments(OffspringModel::moran(4), 2);
  for (int k = 1; k <= 4; ++k) {
    const Q want = oracle::law_expect(law, [k](const auto& v) {
      Q m = v[0] + v[1], r = 1;
      for (int i = 0; i < k; ++i) r *= m;
      return r;
    });
    CHECK(ex[k - 1] == want);
  }
  CHECK(ex[1] == Q(14, 3));
  CHECK_THROWS_AS(aggregate_moments(OffspringModel::moran(4), 5), Error);
  CHECK_THROWS_AS(aggregate_moments(OffspringModel::moran(4), -1), Error);
}

TEST_CASE("Mohle diagnostics") {
  auto d = mohle_diagnostics(OffspringModel::moran(100));
  CHECK(d.alpha_over_n == doctest::Approx(0.0002).epsilon(1e-14));
  CHECK(d.beta_over_alpha_n == 0.0);
  CHECK(d.gamma_over_alpha_n == 0.0);
  d = mohle_diagnostics(OffspringModel::wright_fisher(100));
  CHECK(d.alpha_over_n == doctest::Approx(0.0099).epsilon(1e-14));
  std::vector<int> all(6, 0);
  all[0] = 6;
  d = mohle_diagnostics(OffspringModel::table(6, {{all, 1.0}}));
  CHECK(d.beta_over_alpha_n == doctest::Approx(4.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("table file") {
  const auto good = temp_file("table_ok.txt",
                              "# comment\nmultiset: 2,1,1,0 ; prob: 0.5\nmultiset: 1,1,1,1 ; prob: 0.5\n");
  const auto m = OffspringModel::load_table(good.string());
  CHECK(m.population() == 4);
  CHECK(m.kind() == OffspringKind::kTable);
  CHECK(exact_moments(m).alpha > 0);
  const auto bad_sum = temp_file("table_sum.txt", "multiset: 2,1,1,0 ; prob: 0.5\n");
  CHECK_THROWS_AS(OffspringModel::load_table(bad_sum.string()), Error);
  const auto bad_total = temp_file("table_total.txt", "multiset: 2,2,1,0 ; prob: 1\n");
  CHECK_THROWS_AS(OffspringModel::load_table(bad_total.string()), Error);
  const auto garbled = temp_file("table_garbled.txt", "multiset 2,1,1,0 prob 1\n");
  CHECK_THROWS_AS(OffspringModel::load_table(garbled.string()), Error);
  CHECK_THROWS_AS(OffspringModel::load_table("/nonexistent/table.txt"), Error);
}

TEST_CASE("kind names round trip") {
  for (auto k : {OffspringKind::kWrightFisher, OffspringKind::kMoran, OffspringKind::kDirichletMultinomial,
                 OffspringKind::kTable})
    CHECK(parse_offspring_kind(to_string(k)) == k);
  CHECK_FALSE(parse_offspring_kind("kingman").has_value());
}

}  // TEST_SUITE
