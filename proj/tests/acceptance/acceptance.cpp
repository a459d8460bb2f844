// Acceptance run: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dirapprox/bounds.hpp"
#include "dirapprox/chain.hpp"
#include "dirapprox/distance.hpp"
#include "dirapprox/experiment.hpp"
#include "dirapprox/offspring.hpp"
#include "dirapprox/parallel.hpp"
#include "dirapprox/polya.hpp"
#include "dirapprox/stein.hpp"

using namespace dirapprox;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int g_workers = 1;

// ---------------------------------------------------------------------------

Outcome moment_identities() {
  Outcome o;
  double worst = 0.0;
  RngStream rng(11, 0);
  for (auto m : {OffspringModel::moran(4), OffspringModel::moran(6), OffspringModel::wright_fisher(4)}) {
    const auto rep = verify_moment_identities(m, rng);
    if (!rep.exact) o.pass = false;
    for (const auto& r : rep.rows) {
      if (r.skipped) continue;
      worst = std::max(worst, std::fabs(r.residual));
      if (!(std::fabs(r.residual) < 1e-12)) o.pass = false;
    }
  }
  o.detail = "max residual " + num(worst) + " over Moran N=4,6 and Wright-Fisher N=4";
  return o;
}

Outcome stein_characterization() {
  Outcome o;
  double worst = 0.0, worst_z = 0.0;
  int count = 0;
  const std::vector<std::vector<double>> params = {{1, 1}, {0.5, 2}, {1, 1, 1}, {0.5, 0.5, 2}};
  for (std::size_t p = 0; p < params.size(); ++p) {
    const DirichletParams a(params[p]);
    const std::size_t k = a.dim();
    std::vector<int> c(k, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
      if (pos == k) {
        const double r = characterization_residual(a, c);
        worst = std::max(worst, std::fabs(r));
        if (!(std::fabs(r) < 1e-12)) o.pass = false;
        RngStream rng = RngStream(21, p).split(static_cast<std::uint64_t>(count));
        const auto mc = characterization_mc(a, c, rng, 1'000'000);
        const double z = mc.stderr_ > 0 ? std::fabs(mc.mean) / mc.stderr_ : (mc.mean == 0 ? 0 : 1e9);
        worst_z = std::max(worst_z, z);
        if (z > 4.0) o.pass = false;
        ++count;
        return;
      }
      for (int e = 0; e <= left; ++e) {
        c[pos] = e;
        rec(pos + 1, left - e);
      }
      c[pos] = 0;
    };
    rec(0, 3);
  }
  o.detail = std::to_string(count) + " monomials, max exact residual " + num(worst) +
             ", max MC |z| " + num(worst_z);
  return o;
}

Outcome stein_solution() {
  Outcome o;
  std::string notes;
  // Slope of the solution for h(x) = x1 is exactly -1/s.
  double worst_dev = 0.0, worst_budget = 0.0;
  for (const auto& av : std::vector<std::vector<double>>{{1, 1}, {2, 3}}) {
    const DirichletParams a(av);
    const auto h = TestFunction::monomial({1});
    SteinOptions opts;
    opts.mc_per_level = 1'000'000;
    opts.workers = g_workers;
    const auto schedule = DeathProcessSchedule::for_tolerance(a.s(), h.norms().h1, 1e-5);
    const double eps = 0.1;
    for (int g = 0; g < 10; ++g) {
      const SimplexPoint x({0.05 + 0.08 * g});
      const auto d = stein_f_difference(a, h, x, 0, eps, schedule, opts, RngStream(31, g));
      // f(x + eps e1) - f(x) against the exact -eps/s.
      const double dev = std::fabs(d.value + eps / a.s());
      const double budget = 4.0 * d.stderr_ + d.truncation;
      worst_dev = std::max(worst_dev, dev);
      worst_budget = std::max(worst_budget, budget);
      if (dev > budget || budget > 1e-3) o.pass = false;
    }
  }
  notes = "differences: max |dev| " + num(worst_dev) + " vs max allowance " + num(worst_budget);
  // Sup and Lipschitz bounds over the battery.
  int checked = 0, failed = 0;
  for (const auto& av : std::vector<std::vector<double>>{{1, 1}, {2, 3}}) {
    const DirichletParams a(av);
    std::vector<SimplexPoint> grid;
    for (double x1 : {0.2, 0.35, 0.5, 0.65, 0.8}) grid.emplace_back(std::vector<double>{x1});
    SteinOptions opts;
    opts.mc_per_level = 100'000;
    opts.workers = g_workers;
    std::uint64_t t = 0;
    for (const auto& h : standard_battery(1)) {
      const double scale = h.centered_sup(h.expectation(a).value);
      const auto schedule = DeathProcessSchedule::for_tolerance(a.s(), scale, 1e-4);
      const auto rep = verify_solution_bounds(a, h, grid, schedule, opts, RngStream(32, t++), 0.05);
      checked += 3;
      failed += !rep.sup_pass + !rep.lip1_pass + !rep.lip2_pass;
    }
  }
  if (failed) o.pass = false;
  o.detail = notes + "; solution bounds " + std::to_string(checked - failed) + "/" + std::to_string(checked) + " hold";
  return o;
}

Outcome polya() {
  Outcome o;
  bool exact_ok = true;
  int cases = 0;
  for (const auto& av : std::vector<std::vector<double>>{{1, 1}, {2, 1}, {1, 1, 1}, {0.5, 0.5}}) {
    const DirichletParams a(av);
    for (std::int64_t n = 1; n <= 8; ++n) {
      const auto r = verify_pair_identities(a, n);
      ++cases;
      if (!r.exact || !r.drift_zero || !r.second_zero || !r.triple_ok) exact_ok = false;
    }
  }
  bool cert_ok = true;
  std::vector<double> ns, gaps;
  std::uint64_t t = 0;
  for (const auto& av : std::vector<std::vector<double>>{{1, 1}, {2, 3, 1}}) {
    const DirichletParams a(av);
    const auto battery = standard_battery(a.dim() - 1);
    for (std::int64_t n : {1, 100, 1000, 10000}) {
      const auto cert = certify_theorem4(a, n, battery, 20'000, RngStream(41, t++), g_workers);
      cert_ok = cert_ok && cert.pass;
      if (av.size() == 2 && n >= 100)
        for (const auto& g : cert.rows)
          if (g.tag == "x1^2") {
            ns.push_back(static_cast<double>(n));
            gaps.push_back(g.gap);
          }
    }
  }
  const double slope = log_log_slope(ns, gaps);
  const bool slope_ok = std::fabs(slope + 1.0) <= 0.2;
  o.pass = exact_ok && cert_ok && slope_ok;
  o.detail = std::to_string(cases) + " exact cases " + (exact_ok ? "zero" : "NONZERO") +
             ", certification " + (cert_ok ? "holds" : "fails") + ", x1^2 gap slope " + num(slope);
  return o;
}

ChainModel wf_pim(int n, std::size_t k) {
  std::vector<double> pi(k, 1.0 / (2.0 * n));
  return ChainModel{n, MutationMatrix::pim(pi), std::nullopt};
}

Outcome theorem1() {
  Outcome o;
  int checked = 0, failed = 0;
  for (std::size_t k : {2, 3}) {
    const DirichletParams a(std::vector<double>(k, 1.0));
    for (int n : {25, 50, 100, 200}) {
      const ChainModel model = wf_pim(n, k);
      const auto bound = theorem1_bound(summarize(model.mutation, a, n), a, n);
      if (k == 2) {
        if (bound.a1 != 0.0 || std::fabs(bound.a2 - 8.0 / n) > 1e-14) o.pass = false;
      }
      std::vector<GapEstimate> rows;
      if (state_count(n, k) <= kMaxExactStates && n <= 25) {
        const auto law = exact_stationary(model).law();
        for (const auto& h : standard_battery(k - 1)) rows.push_back(smooth_gap(law, a, h, bound.smooth_bound(h.norms())));
      } else {
        RunOptions opts;
        opts.n_samples = 100'000;
        opts.workers = g_workers;
        const auto run = run_to_stationarity(model, opts, RngStream(51, k * 1000 + n));
        for (const auto& h : standard_battery(k - 1)) rows.push_back(smooth_gap(run, a, h, bound.smooth_bound(h.norms())));
      }
      for (const auto& g : rows) {
        ++checked;
        if (!g.pass) {
          ++failed;
          o.detail += " [" + g.tag + " K=" + std::to_string(k) + " N=" + std::to_string(n) + "]";
        }
      }
    }
  }
  if (failed) o.pass = false;
  o.detail = std::to_string(checked - failed) + "/" + std::to_string(checked) +
             " gaps within bound; A1 = 0 and A2 = 8/N checked" + o.detail;
  return o;
}

Outcome theorem2() {
  Outcome o;
  // Golden value at N = 4.
  const auto moran4 = OffspringModel::moran(4);
  const auto mom4 = exact_moments(moran4);
  const auto pi4 = pim_pi_for({Rational(1), Rational(1)}, mom4.alpha, 4);
  const auto ex = theorem2_exact(mom4, pi4, 4);
  const bool golden = ex.a2 == Rational(41, 9);
  const bool moran_zero = ex.beta_gamma_radicand == 0;
  const auto dm = OffspringModel::dirichlet_multinomial(8, 1.0);
  const auto dmom = exact_moments(dm);
  const auto dex = theorem2_exact(dmom, pim_pi_for({Rational(1), Rational(1)}, dmom.alpha, 8), 8);
  const bool dm_positive = dex.beta_gamma_radicand > 0;
  int checked = 0, failed = 0;
  const DirichletParams a({1.0, 1.0});
  for (int n : {50, 100}) {
    const auto off = OffspringModel::moran(n);
    const auto mom = exact_moments(off);
    std::vector<double> pi;
    for (const auto& r : pim_pi_for({Rational(1), Rational(1)}, mom.alpha, n)) pi.push_back(to_double(r));
    const auto bound = theorem2_bound(off, pi);
    const ChainModel model{n, MutationMatrix::pim(pi), off};
    const auto law = exact_stationary(model).law();
    RunOptions opts;
    opts.n_samples = 20'000;
    opts.thin = static_cast<std::int64_t>(n) * n / 4;
    opts.workers = g_workers;
    const auto run = run_to_stationarity(model, opts, RngStream(61, n));
    for (const auto& h : standard_battery(1)) {
      const double b = bound.smooth_bound(h.norms());
      for (const auto& g : {smooth_gap(law, a, h, b), smooth_gap(run, a, h, b)}) {
        ++checked;
        if (!g.pass) {
          ++failed;
          o.detail += " [" + g.tag + " N=" + std::to_string(n) + "]";
        }
      }
    }
  }
  o.pass = golden && moran_zero && dm_positive && failed == 0;
  o.detail = std::string("A2(N=4) = ") + ex.a2.str() + ", Moran beta/gamma term " + ex.beta_gamma_radicand.str() +
             ", Dirichlet-multinomial term " + num(to_double(dex.beta_gamma_radicand)) + ", " +
             std::to_string(checked - failed) + "/" + std::to_string(checked) + " gaps within bound" + o.detail;
  return o;
}

Outcome kolmogorov() {
  Outcome o;
  const DirichletParams a({1.0, 1.0});
  std::vector<double> exact, mc;
  for (int n : {25, 50, 100, 200}) {
    const ChainModel model = wf_pim(n, 2);
    exact.push_back(kolmogorov_k2(exact_stationary(model).law(), a).distance);
    RunOptions opts;
    opts.n_samples = 100'000;
    opts.workers = g_workers;
    mc.push_back(kolmogorov_k2(run_to_stationarity(model, opts, RngStream(71, n)), a).distance);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < exact.size(); ++i) inversions += exact[i] >= exact[i - 1];
  o.pass = inversions <= 1;
  o.detail = "exact distances";
  for (double v : exact) o.detail += " " + num(v);
  o.detail += " (" + std::to_string(inversions) + " inversions); sampled";
  for (double v : mc) o.detail += " " + num(v);
  return o;
}

Outcome cross_implementation() {
  Outcome o;
  const int n = 20;
  const auto p = MutationMatrix::from_rows({{0.94, 0.04, 0.02}, {0.01, 0.97, 0.02}, {0.05, 0.03, 0.92}});
  const auto off = OffspringModel::wright_fisher(n);
  const std::vector<std::vector<std::int64_t>> states = {{3, 5}, {10, 2}, {0, 20}, {7, 7}, {15, 0}};
  constexpr std::size_t steps = 1'000'000;
  double worst = 0.0;
  std::vector<double> zs(states.size());
  parallel_for(states.size(), g_workers, [&](std::size_t si) {
    const ChainState x{states[si], n};
    // Moments: dW1, dW2, dW1^2, dW1 dW2, dW2^2.
    double sum[2][5] = {}, sq[2][5] = {};
    for (int impl = 0; impl < 2; ++impl) {
      RngStream rng = RngStream(81, si).split(impl);
      for (std::size_t t = 0; t < steps; ++t) {
        const ChainState y = impl == 0 ? step_wright_fisher(x, p, rng) : step_cannings(x, off, p, rng);
        const double d1 = static_cast<double>(y.counts[0] - x.counts[0]) / n;
        const double d2 = static_cast<double>(y.counts[1] - x.counts[1]) / n;
        const double v[5] = {d1, d2, d1 * d1, d1 * d2, d2 * d2};
        for (int q = 0; q < 5; ++q) {
          sum[impl][q] += v[q];
          sq[impl][q] += v[q] * v[q];
        }
      }
    }
    double z = 0.0;
    for (int q = 0; q < 5; ++q) {
      double m[2], var[2];
      for (int impl = 0; impl < 2; ++impl) {
        m[impl] = sum[impl][q] / steps;
        var[impl] = std::max(0.0, sq[impl][q] / steps - m[impl] * m[impl]) / (steps - 1.0);
      }
      const double se = std::sqrt(var[0] + var[1]);
      z = std::max(z, se > 0 ? std::fabs(m[0] - m[1]) / se : (m[0] == m[1] ? 0.0 : 1e9));
    }
    zs[si] = z;
  });
  for (double z : zs) worst = std::max(worst, z);
  o.pass = worst <= 4.0;
  o.detail = "max |z| " + num(worst) + " over 5 states x 5 moments";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "dirapprox-acceptance";
  fs::remove_all(root);
  const std::vector<std::string> configs = {
      "experiment = wf-theorem1\nseed = 7\nmodel.N = 100\nmodel.a = [1, 1]\nmc.samples = 4000\n",
      "experiment = wf-theorem1\nseed = 8\nmodel.N = 30\nmodel.a = [1, 2, 1]\nmc.samples = 3000\nprobe.reference = 20000\n",
      "experiment = cannings-theorem2\nseed = 9\nmodel.N = 20\nmodel.offspring = moran\nmodel.a = [1, 1]\nmc.samples = 2000\nmc.thin = 100\n",
      "experiment = polya-theorem4\nseed = 10\nmodel.a = [2, 3, 1]\npolya.n = [10, 1000]\nmc.samples = 5000\n",
      "experiment = stein-verify\nseed = 11\nmodel.a = [1, 1]\nstein.grid = 2\nmc.samples = 2000\nstein.tests = [\"x1^2\", \"cos(1)\"]\n",
      "experiment = moments-verify\nseed = 12\nmodel.N = 12\nmodel.offspring = dirichlet-multinomial\nmodel.phi = 2\nmc.samples = 20000\n"};
  int compared = 0, differing = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto cfg = ExperimentConfig::parse(configs[i]);
    std::vector<fs::path> dirs;
    for (int w : {1, 3, 1}) {
      const fs::path d = root / (std::to_string(i) + "-" + std::to_string(dirs.size()) + "-w" + std::to_string(w));
      run_experiment(cfg, d.string(), w);
      dirs.push_back(d);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      for (std::size_t j = 1; j < dirs.size(); ++j) {
        ++compared;
        if (slurp(dirs[0] / name) != slurp(dirs[j] / name)) {
          ++differing;
          o.detail += " [" + dirs[j].string() + "/" + name.string() + "]";
        }
      }
    }
  }
  fs::remove_all(root);
  o.pass = differing == 0 && compared > 0;
  o.detail = std::to_string(compared) + " artifact comparisons across worker counts 1 and 3, " +
             std::to_string(differing) + " differ" + o.detail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion numbers select a subset.
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));
  g_workers = std::max(1, default_workers());
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"moment identities", moment_identities},
      {"Stein characterization", stein_characterization},
      {"Stein solution", stein_solution},
      {"Polya exactness and certification", polya},
      {"Wright-Fisher certification", theorem1},
      {"Cannings certification", theorem2},
      {"Kolmogorov convergence", kolmogorov},
      {"cross-implementation oracle", cross_implementation},
      {"determinism", determinism}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu %s: %s (%s; %.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
