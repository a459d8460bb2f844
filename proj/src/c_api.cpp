#include "dirapprox/dirapprox.h"

#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "dirapprox/chain.hpp"
#include "dirapprox/error.hpp"
#include "dirapprox/experiment.hpp"
#include "dirapprox/parallel.hpp"
#include "dirapprox/rng.hpp"
#include "dirapprox/simplex.hpp"
#include "dirapprox/special.hpp"

struct da_config {
  dirapprox::ExperimentConfig config;
};

struct da_report {
  std::string text;
  int exit_code = 0;
};

struct da_rng {
  dirapprox::RngStream stream;
};

namespace {

thread_local std::string g_last_error;

da_status to_status(dirapprox::ErrorCode code) {
  return static_cast<da_status>(static_cast<int>(code));
}

template <class F>
da_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return DA_OK;
  } catch (const dirapprox::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return DA_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) dirapprox::fail(dirapprox::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

da_report* make_report(std::string text, int exit_code = 0) {
  return new da_report{std::move(text), exit_code};
}

}  // namespace

extern "C" {

const char* da_version(void) { return dirapprox::kVersion; }
const char* da_last_error(void) { return g_last_error.c_str(); }

const char* da_status_name(da_status status) {
  switch (status) {
    case DA_OK: return "ok";
    case DA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DA_ERR_DOMAIN: return "domain error";
    case DA_ERR_DIMENSION: return "dimension mismatch";
    case DA_ERR_PARSE: return "parse error";
    case DA_ERR_IO: return "i/o error";
    case DA_ERR_STATE_SPACE: return "state space too large";
    case DA_ERR_REDUCIBLE: return "reducible mutation";
    case DA_ERR_DEGENERATE: return "degenerate model";
    case DA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int da_default_workers(void) { return dirapprox::default_workers(); }

da_status da_config_load(const char* path, da_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new da_config{dirapprox::ExperimentConfig::load(path)};
  });
}

da_status da_config_parse(const char* text, da_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new da_config{dirapprox::ExperimentConfig::parse(text)};
  });
}

da_status da_config_set(da_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->config.set(key, value);
  });
}

da_status da_config_hash(const da_config* config, uint64_t* out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = config->config.hash();
  });
}

void da_config_free(da_config* config) { delete config; }

const char* da_report_text(const da_report* report) { return report ? report->text.c_str() : ""; }
int da_report_exit_code(const da_report* report) { return report ? report->exit_code : 1; }
void da_report_free(da_report* report) { delete report; }

da_status da_validate(const da_config* config, da_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_report(dirapprox::validate_config(config->config));
  });
}

da_status da_run(const da_config* config, const char* out_dir, int workers, da_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    std::string dir = "dirapprox-out";
    if (out_dir) {
      dir = out_dir;
    } else if (config->config.has("output.dir")) {
      const auto& v = config->config.at("output.dir");
      if (!v.is_string())
        dirapprox::fail(dirapprox::ErrorCode::kInvalidArgument, "output.dir: expected a string");
      dir = v.get<std::string>();
    }
    const auto r = dirapprox::run_experiment(config->config, dir, workers);
    *out = make_report(r.summary_json, r.exit_code);
  });
}

da_status da_bound(const da_config* config, da_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_report(dirapprox::bound_command(config->config));
  });
}

da_status da_moments(const da_config* config, int workers, da_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_report(dirapprox::moments_command(config->config, workers));
  });
}

da_status da_stein_f(const da_config* config, int workers, da_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_report(dirapprox::stein_f_command(config->config, workers));
  });
}

da_status da_rng_create(uint64_t seed, uint64_t stream, da_rng** out) {
  return guarded([&] {
    require(out, "out");
    *out = new da_rng{dirapprox::RngStream(seed, stream)};
  });
}

da_status da_rng_split(const da_rng* rng, uint64_t item, da_rng** out) {
  return guarded([&] {
    require(rng, "rng");
    require(out, "out");
    *out = new da_rng{rng->stream.split(item)};
  });
}

double da_rng_uniform(da_rng* rng) { return rng ? rng->stream.uniform() : 0.0; }
void da_rng_free(da_rng* rng) { delete rng; }

da_status da_dirichlet_moment(const double* a, size_t k, const int* exponents, double* out) {
  return guarded([&] {
    require(a, "a");
    require(exponents, "exponents");
    require(out, "out");
    const dirapprox::DirichletParams p(std::vector<double>(a, a + k));
    *out = dirapprox::dirichlet_mixed_moment(p, std::span<const int>(exponents, k));
  });
}

da_status da_dirichlet_sample(const double* a, size_t k, da_rng* rng, double* out_full) {
  return guarded([&] {
    require(a, "a");
    require(rng, "rng");
    require(out_full, "out_full");
    const dirapprox::DirichletParams p(std::vector<double>(a, a + k));
    const auto x = dirapprox::dirichlet_sample(p, rng->stream);
    for (size_t i = 0; i < k; ++i) out_full[i] = x.full(i);
  });
}

da_status da_reg_inc_beta(double x, double a, double b, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = dirapprox::reg_inc_beta(x, a, b);
  });
}

da_status da_wf_step(const double* mutation, size_t k, int64_t population, int64_t* counts,
                     da_rng* rng) {
  return guarded([&] {
    require(mutation, "mutation");
    require(counts, "counts");
    require(rng, "rng");
    if (k < 2) dirapprox::fail(dirapprox::ErrorCode::kDimension, "need k >= 2 types");
    std::vector<std::vector<double>> rows(k, std::vector<double>(k));
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < k; ++j) rows[i][j] = mutation[i * k + j];
    const auto p = dirapprox::MutationMatrix::from_rows(rows);
    dirapprox::ChainState x{std::vector<std::int64_t>(counts, counts + k - 1), population};
    x.validate();
    const auto next = dirapprox::step_wright_fisher(x, p, rng->stream);
    for (size_t i = 0; i + 1 < k; ++i) counts[i] = next.counts[i];
  });
}

}  // extern "C"
