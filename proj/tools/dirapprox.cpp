#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dirapprox/dirapprox.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::int64_t mc_budget = 0;
  int workers = 0;
};

int report_error(da_status st) {
  std::cerr << "error (" << da_status_name(st) << "): " << da_last_error() << "\n";
  return 1;
}

// Loads the config and applies --seed and --mc-budget.
da_config* load(const Options& o, int& code) {
  da_config* cfg = nullptr;
  da_status st = da_config_load(o.config.c_str(), &cfg);
  if (st == DA_OK && o.has_seed) st = da_config_set(cfg, "seed", std::to_string(o.seed).c_str());
  if (st == DA_OK && o.mc_budget > 0)
    st = da_config_set(cfg, "mc.samples", std::to_string(o.mc_budget).c_str());
  if (st != DA_OK) {
    code = report_error(st);
    da_config_free(cfg);
    return nullptr;
  }
  return cfg;
}

int emit(da_status st, da_report* rep) {
  if (st != DA_OK) return report_error(st);
  std::cout << da_report_text(rep);
  const std::string text = da_report_text(rep);
  if (!text.empty() && text.back() != '\n') std::cout << "\n";
  const int code = da_report_exit_code(rep);
  da_report_free(rep);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet approximation toolkit"};
  app.set_version_flag("--version", std::string(da_version()));
  app.require_subcommand(1);

  Options o;
  o.workers = da_default_workers();
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the config seed")->each([&](const std::string&) { o.has_seed = true; });
    sub->add_option("--workers", o.workers, "worker threads (default from DIRAPPROX_WORKERS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--mc-budget", o.mc_budget, "override mc.samples")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "simulate, bound and certify; writes artifacts");
  common(run);
  run->add_option("--out", o.out, "output directory (default: output.dir or dirapprox-out)");
  auto* validate = app.add_subcommand("validate", "static checks and derived quantities");
  common(validate);
  auto* moments = app.add_subcommand("moments", "offspring factorial moments and identity residuals");
  common(moments);
  auto* bound = app.add_subcommand("bound", "bound report without simulation");
  common(bound);
  auto* stein = app.add_subcommand("stein-f", "estimate the Stein solution at stein.x");
  common(stein);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  int code = 0;
  da_config* cfg = load(o, code);
  if (!cfg) return code;
  da_report* rep = nullptr;
  da_status st = DA_OK;
  if (*run) {
    st = da_run(cfg, o.out.empty() ? nullptr : o.out.c_str(), o.workers, &rep);
  } else if (*validate) {
    st = da_validate(cfg, &rep);
  } else if (*moments) {
    st = da_moments(cfg, o.workers, &rep);
  } else if (*bound) {
    st = da_bound(cfg, &rep);
  } else {
    st = da_stein_f(cfg, o.workers, &rep);
  }
  da_config_free(cfg);
  return emit(st, rep);
}
