#ifndef SUBNETMLE_SUBNETMLE_H
#define SUBNETMLE_SUBNETMLE_H

/* C interface to the sub-network maximum-likelihood library.
 *
 * All functions return an snm_status. On failure a description is available
 * from snm_last_error() until the next call on the same thread. Strings
 * returned through char** are owned by the caller and released with
 * snm_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SUBNETMLE_BUILDING)
#    define SNM_API __declspec(dllexport)
#  else
#    define SNM_API __declspec(dllimport)
#  endif
#else
#  define SNM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum snm_status {
  SNM_OK = 0,
  SNM_ERR_USAGE = 1,          /* invalid argument or handle */
  SNM_ERR_SEPARATION = 2,     /* partition violates the separation conditions */
  SNM_ERR_ASSUMPTION = 3,     /* an assumption gate (A0-A3) failed */
  SNM_ERR_CONVERGENCE = 4,    /* estimation did not converge */
  SNM_ERR_CONFIG = 5,         /* malformed configuration */
  SNM_ERR_IO = 6,             /* file could not be read or written */
  SNM_ERR_DIMENSION = 7,      /* inconsistent sizes, orders or channels */
  SNM_ERR_NUMERIC = 8,        /* singular operator, divergence, rank or domain failure */
  SNM_ERR_INTERNAL = 9
} snm_status;

typedef struct snm_config snm_config;
typedef struct snm_estimate snm_estimate;

SNM_API const char* snm_version(void);
SNM_API const char* snm_last_error(void);
SNM_API const char* snm_status_name(snm_status status);
/* Process exit code for a status: 0, 1 (usage, config, io and others), 2, 3 or 4. */
SNM_API int snm_exit_code(snm_status status);

/* 0 quiet, 1 stage summaries on stderr, 2 more detail. */
SNM_API void snm_set_log_level(int level);

/* ---- configuration ---- */
SNM_API snm_status snm_config_load(const char* path, snm_config** out);
SNM_API snm_status snm_config_parse(const char* json_text, snm_config** out);
SNM_API void snm_config_free(snm_config* config);
SNM_API snm_status snm_config_set_seed(snm_config* config, uint64_t seed);
/* Comma-separated channel names such as "y3" or "y1,y2,y3". */
SNM_API snm_status snm_config_set_observed(snm_config* config, const char* channels);
SNM_API snm_status snm_config_set_jobs(snm_config* config, unsigned jobs);
SNM_API snm_status snm_config_set_samples(snm_config* config, size_t samples);
SNM_API snm_status snm_config_set_runs(snm_config* config, size_t runs);
SNM_API snm_status snm_config_hash(const snm_config* config, char** out);

/* ---- commands ----
 * out_dir may be NULL to use the configured output directory. The other path
 * arguments may be NULL for their defaults inside out_dir. A textual report is
 * returned through `report` when it is not NULL, also on non-zero statuses
 * produced by the command itself (separation, assumption, convergence). */
SNM_API snm_status snm_cmd_simulate(const snm_config* config, const char* out_dir, char** report);
SNM_API snm_status snm_cmd_check(const snm_config* config, char** report);
SNM_API snm_status snm_cmd_estimate(const snm_config* config, const char* data_csv, const char* out_dir,
                                    char** report);
SNM_API snm_status snm_cmd_evaluate(const snm_config* config, const char* result_csv, const char* validation_csv,
                                    const char* out_dir, char** report);
SNM_API snm_status snm_cmd_mc(const snm_config* config, const char* out_dir, char** report);

/* ---- estimation on in-memory results ---- */
SNM_API snm_status snm_estimate_run(const snm_config* config, const char* data_csv, snm_estimate** out);
SNM_API void snm_estimate_free(snm_estimate* estimate);
/* Copies up to `capacity` values; `*count` receives the total available. */
SNM_API snm_status snm_estimate_theta(const snm_estimate* estimate, double* values, size_t capacity, size_t* count);
SNM_API snm_status snm_estimate_lambda(const snm_estimate* estimate, double* values, size_t capacity, size_t* count);
SNM_API snm_status snm_estimate_parameter_name(const snm_estimate* estimate, size_t index, char** out);
SNM_API snm_status snm_estimate_nll(const snm_estimate* estimate, double* out);
SNM_API snm_status snm_estimate_converged(const snm_estimate* estimate, int* out);

/* Fit (100 * fit) of each target output of an estimate on a validation file. */
SNM_API snm_status snm_estimate_fits(const snm_config* config, const snm_estimate* estimate,
                                     const char* validation_csv, double* values, size_t capacity, size_t* count);

SNM_API void snm_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* SUBNETMLE_SUBNETMLE_H */
