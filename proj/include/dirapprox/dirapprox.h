#ifndef DIRAPPROX_DIRAPPROX_H
#define DIRAPPROX_DIRAPPROX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DA_API __declspec(dllexport)
#else
#define DA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum da_status {
  DA_OK = 0,
  DA_ERR_INVALID_ARGUMENT = 1,
  DA_ERR_DOMAIN = 2,
  DA_ERR_DIMENSION = 3,
  DA_ERR_PARSE = 4,
  DA_ERR_IO = 5,
  DA_ERR_STATE_SPACE = 6,
  DA_ERR_REDUCIBLE = 7,
  DA_ERR_DEGENERATE = 8,
  DA_ERR_INTERNAL = 99
} da_status;

typedef struct da_config da_config;
typedef struct da_report da_report;
typedef struct da_rng da_rng;

DA_API const char* da_version(void);
/* Message of the last failure on the calling thread; empty after success. */
DA_API const char* da_last_error(void);
DA_API const char* da_status_name(da_status status);
/* Worker count from the DIRAPPROX_WORKERS environment variable, else 1. */
DA_API int da_default_workers(void);

/* Experiment configuration ("key = value" text). */
DA_API da_status da_config_load(const char* path, da_config** out);
DA_API da_status da_config_parse(const char* text, da_config** out);
DA_API da_status da_config_set(da_config* config, const char* key, const char* value);
DA_API da_status da_config_hash(const da_config* config, uint64_t* out);
DA_API void da_config_free(da_config* config);

/* Text or JSON results with an exit code (0 pass, 2 certification failure). */
DA_API const char* da_report_text(const da_report* report);
DA_API int da_report_exit_code(const da_report* report);
DA_API void da_report_free(da_report* report);

DA_API da_status da_validate(const da_config* config, da_report** out);
/* Writes the experiment artifacts into out_dir; NULL means output.dir from
   the config, else "dirapprox-out". */
DA_API da_status da_run(const da_config* config, const char* out_dir, int workers, da_report** out);
DA_API da_status da_bound(const da_config* config, da_report** out);
DA_API da_status da_moments(const da_config* config, int workers, da_report** out);
DA_API da_status da_stein_f(const da_config* config, int workers, da_report** out);

/* Reproducible random streams. */
DA_API da_status da_rng_create(uint64_t seed, uint64_t stream, da_rng** out);
DA_API da_status da_rng_split(const da_rng* rng, uint64_t item, da_rng** out);
DA_API double da_rng_uniform(da_rng* rng);
DA_API void da_rng_free(da_rng* rng);

/* Dirichlet helpers; `a` has k entries, x has k-1 coordinates. */
DA_API da_status da_dirichlet_moment(const double* a, size_t k, const int* exponents, double* out);
DA_API da_status da_dirichlet_sample(const double* a, size_t k, da_rng* rng, double* out_full);
DA_API da_status da_reg_inc_beta(double x, double a, double b, double* out);

/* One Wright-Fisher step for PIM or general mutation (k x k row-major).
   counts has k-1 entries and is updated in place. */
DA_API da_status da_wf_step(const double* mutation, size_t k, int64_t population, int64_t* counts,
                            da_rng* rng);

#ifdef __cplusplus
}
#endif

#endif
