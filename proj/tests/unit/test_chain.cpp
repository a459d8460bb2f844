#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "dirapprox/chain.hpp"
#include "dirapprox/error.hpp"
#include "oracles.hpp"

using namespace dirapprox;

namespace {

MutationMatrix random_matrix(std::size_t k, RngStream& rng, double scale) {
  std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      rows[i][j] = scale * rng.uniform();
      off += rows[i][j];
    }
    rows[i][i] = 1.0 - off;
  }
  return MutationMatrix::from_rows(rows);
}

}  // namespace

TEST_SUITE("chain") {

TEST_CASE("state validation") {
  CHECK_NOTHROW(ChainState{{2, 3}, 5}.validate());
  CHECK_THROWS_AS(ChainState({{4, 3}, 5}).validate(), Error);
  CHECK_THROWS_AS(ChainState({{-1, 3}, 5}).validate(), Error);
  CHECK(ChainState({{1, 2}, 5}).last() == 2);
  CHECK(ChainState({{1, 2}, 5}).proportions()[1] == doctest::Approx(0.4));
}

TEST_CASE("Wright-Fisher step examples") {
  RngStream rng(1, 1);
  for (int i = 0; i < 100; ++i) {
    CHECK(step_wright_fisher({{10}, 10}, MutationMatrix::identity(2), rng).counts[0] == 10);
    CHECK(step_wright_fisher({{1}, 1}, MutationMatrix::from_rows({{0, 1}, {0.5, 0.5}}), rng).counts[0] == 0);
  }
  const auto p = MutationMatrix::pim({0.005, 0.005});
  std::vector<double> v;
  for (int i = 0; i < 200000; ++i) v.push_back(static_cast<double>(step_wright_fisher({{50}, 100}, p, rng).counts[0]));
  const auto m = oracle::mean_of(v);
  CHECK(std::fabs(m.mean - 50.0) <= 4.0 * m.stderr_);
}

TEST_CASE("Cannings step examples") {
  RngStream rng(2, 2);
  const auto moran = OffspringModel::moran(4);
  for (int i = 0; i < 100; ++i)
    CHECK(step_cannings({{4}, 4}, moran, MutationMatrix::identity(2), rng).counts[0] == 4);
  // From x = 2: X' = 3 if the reproducer is type 1 and the dying one type 2,
  // 1 in the mirror case, 2 otherwise; each with probability 1/3.
  std::map<std::int64_t, int> freq;
  const int reps = 300000;
  for (int i = 0; i < reps; ++i) ++freq[step_cannings({{2}, 4}, moran, MutationMatrix::identity(2), rng).counts[0]];
  CHECK(freq.size() == 3);
  for (std::int64_t x : {1, 2, 3}) {
    const double p = static_cast<double>(freq[x]) / reps;
    CHECK(std::fabs(p - 1.0 / 3.0) <= 4.0 * std::sqrt(2.0 / 9.0 / reps));
  }
}

TEST_CASE("conservation") {
  RngStream rng(3, 3);
  const auto p = random_matrix(4, rng, 0.3);
  const auto dm = OffspringModel::dirichlet_multinomial(12, 0.4);
  ChainState x{{3, 4, 2}, 12};
  int bad = 0;
  for (int i = 0; i < 5000; ++i) {
    x = (i % 2) ? step_wright_fisher(x, p, rng) : step_cannings(x, dm, p, rng);
    std::int64_t sum = 0;
    for (auto c : x.counts) {
      bad += c < 0;
      sum += c;
    }
    bad += sum > 12;
  }
  CHECK(bad == 0);
}

TEST_CASE("Cannings drift under parent-independent mutation") {
  // E[W' - W | W] = pi - sigma W.
  RngStream rng(4, 4);
  const std::vector<double> pi = {0.02, 0.05, 0.03};
  const auto p = MutationMatrix::pim(pi);
  const double sigma = 0.1;
  const auto dm = OffspringModel::dirichlet_multinomial(10, 0.8);
  for (const auto& counts : std::vector<std::vector<std::int64_t>>{{3, 5}, {0, 10}, {6, 1}}) {
    std::vector<double> d0, d1;
    for (int i = 0; i < 200000; ++i) {
      const auto y = step_cannings({counts, 10}, dm, p, rng);
      d0.push_back((y.counts[0] - counts[0]) / 10.0);
      d1.push_back((y.counts[1] - counts[1]) / 10.0);
    }
    const auto m0 = oracle::mean_of(d0), m1 = oracle::mean_of(d1);
    CHECK(std::fabs(m0.mean - (pi[0] - sigma * counts[0] / 10.0)) <= 4.0 * m0.stderr_);
    CHECK(std::fabs(m1.mean - (pi[1] - sigma * counts[1] / 10.0)) <= 4.0 * m1.stderr_);
  }
}

TEST_CASE("conditional moments against exact multinomial enumeration") {
  RngStream rng(5, 5);
  for (std::size_t k : {2, 3}) {
    const auto p = random_matrix(k, rng, 0.3);
    std::vector<ChainState> states;
    oracle::compositions(4, static_cast<int>(k), [&](const std::vector<int>& v) {
      states.push_back({std::vector<std::int64_t>(v.begin(), v.end() - 1), 4});
    });
    const auto rep = verify_conditional_moments_wf(p, 4, states, rng, 20000);
    CHECK(rep.max_exact_residual < 1e-12);
    CHECK(rep.max_mc_z <= 5.0);
    // Independent brute force over MN(4; q) outcomes.
    for (const auto& x : states) {
      const auto tp = transition_probs(p, x.counts, 4);
      std::vector<oracle::Q> q;
      for (double v : tp.q) q.push_back(oracle::Q(v));
      for (std::size_t i = 0; i + 1 < k; ++i)
        for (std::size_t j = 0; j + 1 < k; ++j) {
          oracle::Q e = 0;
          oracle::compositions(4, static_cast<int>(k), [&](const std::vector<int>& y) {
            const oracle::Q di = oracle::Q(y[i] - x.counts[i], 4), dj = oracle::Q(y[j] - x.counts[j], 4);
            e += oracle::multinomial_pmf(y, q) * di * dj;
          });
          CHECK(wf_conditional_second_moment(p, 4, x.proportions(), i, j) ==
                doctest::Approx(oracle::q2d(e)).epsilon(1e-12));
        }
    }
  }
  const auto id = verify_conditional_moments_wf(MutationMatrix::identity(2), 6, {{{6}, 6}}, rng, 1000);
  CHECK(id.max_exact_residual == 0.0);
  for (const auto& r : id.rows) CHECK(r.closed == 0.0);
}

TEST_CASE("stationary runs") {
  SUBCASE("symmetric Wright-Fisher") {
    const ChainModel model{100, MutationMatrix::pim({0.005, 0.005}), std::nullopt};
    RunOptions o;
    o.n_samples = 20000;
    const auto run = run_to_stationarity(model, o, RngStream(6, 0));
    CHECK(run.size() == 20000);
    CHECK(run.thin == 100);
    const auto m = estimate_mean(run, [](std::span<const double> w) { return w[0]; });
    CHECK(std::fabs(m.mean - 0.5) <= 4.0 * m.stderr_);
  }
  SUBCASE("asymmetric Wright-Fisher") {
    const ChainModel model{100, MutationMatrix::pim({0.01, 0.005}), std::nullopt};
    RunOptions o;
    o.n_samples = 20000;
    const auto run = run_to_stationarity(model, o, RngStream(6, 1));
    const auto m = estimate_mean(run, [](std::span<const double> w) { return w[0]; });
    CHECK(std::fabs(m.mean - 2.0 / 3.0) <= 0.02);
  }
  SUBCASE("symmetric Moran") {
    const ChainModel model{50, MutationMatrix::pim({0.0004, 0.0004}), OffspringModel::moran(50)};
    RunOptions o;
    o.n_samples = 5000;
    o.thin = 625;
    const auto run = run_to_stationarity(model, o, RngStream(6, 2));
    const auto m = estimate_mean(run, [](std::span<const double> w) { return w[0]; });
    CHECK(std::fabs(m.mean - 0.5) <= 4.0 * m.stderr_);
  }
}

TEST_CASE("independent seeds agree") {
  const ChainModel model{40, MutationMatrix::pim({0.01, 0.02, 0.015}), std::nullopt};
  RunOptions o;
  o.n_samples = 10000;
  const auto r1 = run_to_stationarity(model, o, RngStream(7, 0));
  const auto r2 = run_to_stationarity(model, o, RngStream(8, 0));
  for (std::size_t c = 0; c < 2; ++c) {
    const auto f = [c](std::span<const double> w) { return w[c] * w[c]; };
    const auto m1 = estimate_mean(r1, f), m2 = estimate_mean(r2, f);
    CHECK(std::fabs(m1.mean - m2.mean) <= 5.0 * std::hypot(m1.stderr_, m2.stderr_));
  }
}

TEST_CASE("runs do not depend on the worker count") {
  const ChainModel model{30, MutationMatrix::pim({0.02, 0.03}), OffspringModel::wright_fisher(30)};
  RunOptions o;
  o.n_samples = 3000;
  o.replicates = 5;
  o.workers = 1;
  const auto a = run_to_stationarity(model, o, RngStream(9, 9));
  o.workers = 4;
  const auto b = run_to_stationarity(model, o, RngStream(9, 9));
  CHECK(a.data == b.data);
  CHECK(a.replicate_sizes == b.replicate_sizes);
  CHECK(run_metadata_json(a) == run_metadata_json(b));
}

TEST_CASE("reducible kernels are rejected") {
  const ChainModel model{10, MutationMatrix::from_rows({{1.0, 0.0}, {0.1, 0.9}}), std::nullopt};
  RunOptions o;
  o.n_samples = 10;
  try {
    run_to_stationarity(model, o, RngStream(1, 0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kReducible);
    CHECK(std::string(e.what()).find("type 2") != std::string::npos);
  }
}

TEST_CASE("default schedule") {
  const ChainModel model{100, MutationMatrix::pim({0.005, 0.005}), std::nullopt};
  CHECK(default_thin(model) == 100);
  CHECK(default_burn_in(model) == 20 * 100 * 2);
  const ChainModel slow{1000, MutationMatrix::pim({1e-9, 1e-9}), std::nullopt};
  CHECK(default_burn_in(slow) == 10'000'000);
}

}  // TEST_SUITE
