#ifndef OCTOLIFT_H
#define OCTOLIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Number of values in one log row, in the CSV column order.
 */
#define OL_LOG_COLUMNS 52

/**
 * Result codes of the C API.
 */
typedef enum {
  OL_STATUS_OK = 0,
  OL_STATUS_NULL_POINTER = 1,
  OL_STATUS_INVALID_UTF8 = 2,
  OL_STATUS_INVALID_CONFIG = 3,
  OL_STATUS_IO = 4,
  OL_STATUS_NUMERICAL = 5,
  OL_STATUS_ALLOCATION_DOMAIN = 6,
  OL_STATUS_ESTIMATION = 7,
  OL_STATUS_OUT_OF_RANGE = 8,
  OL_STATUS_BUFFER_TOO_SMALL = 9,
  OL_STATUS_PANIC = 10,
} OlStatus;

/**
 * Experiment configuration.
 */
typedef struct OlConfig OlConfig;

/**
 * Stepwise closed-loop simulation.
 */
typedef struct OlExperiment OlExperiment;

/**
 * Completed run: log, statistics and metrics.
 */
typedef struct OlRunResult OlRunResult;

/**
 * Summary metrics of a completed run.
 */
typedef struct {
  size_t steps;
  double rmse_final_period[3];
  double terminal_position_error[3];
  double terminal_parameter_error[2];
  /**
   * NaN when the horizon ends before the settle time.
   */
  double max_parameter_error_after_settle[2];
  /**
   * NaN when no horizontal disturbance window lies in the horizon.
   */
  double disturbance_tracking_error;
  double max_alloc_residual;
  double max_constraint_violation;
  size_t lyapunov_violations;
} OlMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ol_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *ol_status_name(OlStatus status);

/**
 * Built-in load-transport scenario.
 *
 * # Safety
 * `out` must be a valid pointer to writable handle storage.
 */
OlStatus ol_config_default(OlConfig **out);

/**
 * Parses and validates a TOML configuration document.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` as for [`ol_config_default`].
 */
OlStatus ol_config_from_toml(const char *toml, OlConfig **out);

/**
 * Reads and validates a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` as for [`ol_config_default`].
 */
OlStatus ol_config_read(const char *path, OlConfig **out);

/**
 * Serializes a configuration to TOML.
 *
 * # Safety
 * `cfg` must be a live handle; `buf` must hold `capacity` bytes or be null;
 * `needed` may be null.
 */
OlStatus ol_config_to_toml(const OlConfig *cfg, char *buf, size_t capacity, size_t *needed);

/**
 * Overrides the run options exposed on the command line.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
OlStatus ol_config_set_run_options(OlConfig *cfg,
                                   uint64_t seed,
                                   bool noise,
                                   bool true_params,
                                   bool disturbance);

/**
 * Sets the simulated horizon in seconds.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
OlStatus ol_config_set_horizon(OlConfig *cfg, double horizon);

/**
 * Number of samples the configuration simulates.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
OlStatus ol_config_num_steps(const OlConfig *cfg, size_t *out);

/**
 * # Safety
 * `cfg` must be null or a handle not freed before.
 */
void ol_config_free(OlConfig *cfg);

/**
 * Solves both Riccati equations; `passed` reports residual, symmetry,
 * definiteness and closed-loop stability together.
 *
 * # Safety
 * `cfg` must be a live handle; `passed` must be writable.
 */
OlStatus ol_care_check(const OlConfig *cfg, bool *passed);

/**
 * Allocation round-trip and KKT exactness over `samples` random inputs.
 *
 * # Safety
 * `cfg` must be a live handle; `passed` must be writable.
 */
OlStatus ol_alloc_check(const OlConfig *cfg, size_t samples, bool *passed);

/**
 * Creates a stepwise simulation from a configuration (copied).
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
OlStatus ol_experiment_new(const OlConfig *cfg, OlExperiment **out);

/**
 * Advances one sample and writes its log row (`OL_LOG_COLUMNS` values).
 *
 * # Safety
 * `exp` must be a live handle; `row` must point to `OL_LOG_COLUMNS`
 * writable doubles.
 */
OlStatus ol_experiment_step(OlExperiment *exp, double *row);

/**
 * Simulation time of the next sample (s).
 *
 * # Safety
 * `exp` must be a live handle; `out` must be writable.
 */
OlStatus ol_experiment_time(const OlExperiment *exp, double *out);

/**
 * # Safety
 * `exp` must be null or a handle not freed before.
 */
void ol_experiment_free(OlExperiment *exp);

/**
 * Runs the full horizon.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
OlStatus ol_run(const OlConfig *cfg, OlRunResult **out);

/**
 * Number of logged samples.
 *
 * # Safety
 * `res` must be a live handle; `out` must be writable.
 */
OlStatus ol_run_result_len(const OlRunResult *res, size_t *out);

/**
 * Copies log row `index` (`OL_LOG_COLUMNS` values).
 *
 * # Safety
 * `res` must be a live handle; `row` must point to `OL_LOG_COLUMNS`
 * writable doubles.
 */
OlStatus ol_run_result_row(const OlRunResult *res, size_t index, double *row);

/**
 * Summary metrics of the run.
 *
 * # Safety
 * `res` must be a live handle; `out` must be writable.
 */
OlStatus ol_run_result_metrics(const OlRunResult *res, OlMetrics *out);

/**
 * Writes the CSV log.
 *
 * # Safety
 * `res` must be a live handle; `path` a NUL-terminated string.
 */
OlStatus ol_run_result_write_csv(const OlRunResult *res, const char *path);

/**
 * # Safety
 * `res` must be null or a handle not freed before.
 */
void ol_run_result_free(OlRunResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCTOLIFT_H */
