/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the simharness simulation-study engine. All functions
 * return SIMH_OK on success; on failure they return a status code and
 * leave a human-readable message in simh_last_error() (thread local).
 *
 * Handles are opaque; every handle created by simh_study_* must be
 * released with simh_study_free().
 */
#ifndef SIMHARNESS_H
#define SIMHARNESS_H

#include <stdint.h>

#if defined(_WIN32)
#define SIMH_API __declspec(dllexport)
#else
#define SIMH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  SIMH_OK = 0,
  SIMH_ERR_INVALID = 1, /* bad arguments, config validation, bad state */
  SIMH_ERR_IO = 2,      /* filesystem failures */
  SIMH_ERR_INTERNAL = 3
} simh_status;

typedef struct simh_study simh_study;

SIMH_API const char* simh_version(void);
SIMH_API const char* simh_last_error(void);

/* --- study lifecycle ---------------------------------------------------- */

SIMH_API simh_status simh_study_open(const char* config_path, simh_study** out);
SIMH_API simh_status simh_study_from_json(const char* json_text, simh_study** out);
/* Built-in example studies: "survival" or "conditional-coverage". */
SIMH_API simh_status simh_study_builtin(const char* example_name, simh_study** out);
SIMH_API void simh_study_free(simh_study* study);

/* Overrides, equivalent to editing the config before running.
 * u64 keys: seed, n_sim, threads, chunk_size, conditional_coverage_groups
 * f64 keys: alpha, theta0, censor_time
 * str keys: name, streams (per_dgm|per_chunk), output_dir, comparator,
 *           censor_time ("none"), export_data (all|none)
 */
SIMH_API simh_status simh_study_set_u64(simh_study*, const char* key, uint64_t value);
SIMH_API simh_status simh_study_set_f64(simh_study*, const char* key, double value);
SIMH_API simh_status simh_study_set_str(simh_study*, const char* key, const char* value);

SIMH_API simh_status simh_study_save_config(const simh_study*, const char* path);

/* Copies the study's configured output directory (may be empty) into buf. */
SIMH_API simh_status simh_study_get_output_dir(const simh_study*, char* buf,
                                               uint64_t buflen);

/* --- execution ----------------------------------------------------------- */

/* Runs the study and writes estimates.csv, states.csv, manifest.json and
 * study_config.json under out_dir; analyze != 0 additionally writes
 * performance.csv, missingness.csv, table.txt/table.csv and, when
 * configured, conditional_coverage.csv. */
SIMH_API simh_status simh_study_run(simh_study*, const char* out_dir, int analyze);

/* Appends `extra` repetitions per DGM to a completed run in out_dir from
 * its recorded end states; outputs are byte-identical to a single longer
 * run. */
SIMH_API simh_status simh_study_continue(simh_study*, const char* out_dir,
                                         uint64_t extra, int analyze);

/* Re-runs one repetition from states_csv; writes the regenerated dataset
 * and its estimate rows under out_dir. */
SIMH_API simh_status simh_study_rerun(simh_study*, const char* out_dir,
                                      const char* states_csv, const char* dgm_id,
                                      uint64_t repetition);

/* Estimates the estimand value from one dataset of big_n observations on a
 * dedicated random-number stream (stream_id < 0 selects the default
 * reserved stream; main-run streams are rejected). method_id NULL/empty =
 * the study comparator, else the first method. */
SIMH_API simh_status simh_study_true_theta(simh_study*, const char* dgm_id,
                                           uint64_t big_n, int64_t stream_id,
                                           const char* method_id, double* out_value);

/* --- analysis & figures --------------------------------------------------- */

/* Computes performance measures from an existing estimates CSV (foreign
 * files accepted; columns beyond the minimum are optional). config_path
 * and overrides_json may be NULL. overrides_json keys: alpha, comparator,
 * measures (array), true_theta (number or {dgm: value}), manifest (path),
 * conditional_groups, estimand. */
SIMH_API simh_status simh_analyze_file(const char* estimates_csv_path,
                                       const char* config_path,
                                       const char* overrides_json,
                                       const char* out_dir);

/* Renders one figure kind: zip | lollipop | nested-loop | strip |
 * scatter-matrix | diff-vs-mean. Inputs as for simh_analyze_file, plus
 * overrides keys: measure, factor_order (array), dgm, zoom (bool),
 * comparator. Writes <kind>.svg and <kind>.csv under out_dir. */
SIMH_API simh_status simh_plot(const char* kind, const char* estimates_csv_path,
                               const char* perf_csv_path, const char* config_path,
                               const char* overrides_json, const char* out_dir);

/* --- calculators ----------------------------------------------------------- */

/* kind: "coverage" (alias "power", "coverage_or_power") with `expected` on
 * the percent scale, or "bias" with var_theta > 0. */
SIMH_API simh_status simh_required_nsim(const char* kind, double expected,
                                        double target_mcse, double var_theta,
                                        uint64_t* out_nsim);

SIMH_API simh_status simh_coverage_under_bias(double bias_over_se, double alpha,
                                              double* out_coverage);

#ifdef __cplusplus
}
#endif

#endif /* SIMHARNESS_H */
