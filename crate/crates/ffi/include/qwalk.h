#ifndef QWALK_H
#define QWALK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Integrated models accepted by [`qwalk_run`].
 */
typedef enum QwalkModel {
  QWALK_MODEL_FULL_GPE = 0,
  QWALK_MODEL_FULL_LINEAR_CHAIN = 1,
  QWALK_MODEL_RATE = 2,
  QWALK_MODEL_RATE_SELFCONSISTENT = 3,
} QwalkModel;

/**
 * Sampled observables of a trajectory.
 */
typedef enum QwalkSeriesField {
  QWALK_SERIES_FIELD_TIME = 0,
  QWALK_SERIES_FIELD_NORM = 1,
  QWALK_SERIES_FIELD_RHO00 = 2,
  QWALK_SERIES_FIELD_DISPLACEMENT_T = 3,
} QwalkSeriesField;

/**
 * Result codes.
 */
typedef enum QwalkStatus {
  QWALK_STATUS_OK = 0,
  QWALK_STATUS_NULL_POINTER = 1,
  QWALK_STATUS_INVALID_ARGUMENT = 2,
  QWALK_STATUS_UNKNOWN_KEY = 3,
  QWALK_STATUS_INTEGRATION_FAILED = 4,
  QWALK_STATUS_BUFFER_TOO_SMALL = 5,
  QWALK_STATUS_PANIC = 6,
} QwalkStatus;

/**
 * Lattice and integrator settings.
 */
typedef struct QwalkParams QwalkParams;

/**
 * Result of one integration.
 */
typedef struct QwalkTrajectory QwalkTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message of this thread, without the
 * terminating NUL; 0 when there is none.
 */
size_t qwalk_last_error_length(void);

/**
 * Copy the last error message into `buf` (NUL-terminated, truncated to
 * `len - 1` bytes). Returns the number of bytes written without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t qwalk_last_error_message(char *buf, size_t len);

/**
 * New parameter set with the library defaults (23 cells, `gamma = 2`,
 * tolerances `1e-9`). Never returns null.
 */
struct QwalkParams *qwalk_params_new(void);

/**
 * # Safety
 * `params` must be null or come from [`qwalk_params_new`] and not be freed yet.
 */
void qwalk_params_free(struct QwalkParams *params);

/**
 * Set a numeric key (`v`, `gamma`, `lattice.n_cells`, `rel_tol`, ...).
 * Keys use the same names as the configuration file. The parameter set is
 * left unchanged when the new value is rejected.
 *
 * # Safety
 * `params` must be a live handle and `key` a NUL-terminated string.
 */
enum QwalkStatus qwalk_params_set(struct QwalkParams *params, const char *key, double value);

/**
 * Set a string-valued key such as `method` (`"dopri5"`, `"dop853"`) or
 * `stop_survival` (`"none"`).
 *
 * # Safety
 * `params` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum QwalkStatus qwalk_params_set_str(struct QwalkParams *params,
                                      const char *key,
                                      const char *value);

/**
 * Read a numeric key. A disabled `stop_survival` reads as NaN.
 *
 * # Safety
 * `params` must be a live handle, `key` a NUL-terminated string and `out`
 * a writable `double`.
 */
enum QwalkStatus qwalk_params_get(const struct QwalkParams *params, const char *key, double *out);

/**
 * Integrate `model` (a [`QwalkModel`] code) from the localized initial
 * state. On success `*out` receives a new trajectory handle.
 *
 * # Safety
 * `params` must be a live handle and `out` a writable pointer.
 */
enum QwalkStatus qwalk_run(const struct QwalkParams *params,
                           uint32_t model,
                           struct QwalkTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from [`qwalk_run`] that was not freed yet.
 */
void qwalk_trajectory_free(struct QwalkTrajectory *traj);

/**
 * Number of samples; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t qwalk_trajectory_len(const struct QwalkTrajectory *traj);

/**
 * Final displacement, stop time and remaining norm. Any output pointer may
 * be null.
 *
 * # Safety
 * `traj` must be a live handle; non-null outputs must be writable.
 */
enum QwalkStatus qwalk_trajectory_summary(const struct QwalkTrajectory *traj,
                                          double *dm_final,
                                          double *stop_time,
                                          double *survival);

/**
 * Copy one sampled observable (a [`QwalkSeriesField`] code) into `buf`.
 * Fails with `BufferTooSmall` when `len` is below the trajectory length.
 *
 * # Safety
 * `traj` must be a live handle and `buf` point to `len` writable doubles.
 */
enum QwalkStatus qwalk_trajectory_copy(const struct QwalkTrajectory *traj,
                                       uint32_t field,
                                       double *buf,
                                       size_t len);

/**
 * Incoherent displacement `v'^2 / (v^2 + v'^2)`.
 *
 * # Safety
 * `out` must be a writable `double`.
 */
enum QwalkStatus qwalk_incoherent_displacement(double v, double v_prime, double *out);

/**
 * Hopping rates along the `v` and `v'` bonds for detuning `delta`.
 *
 * # Safety
 * `rate_v` and `rate_v_prime` must be writable `double`s.
 */
enum QwalkStatus qwalk_hopping_rates(double v,
                                     double v_prime,
                                     double gamma,
                                     double delta,
                                     double *rate_v,
                                     double *rate_v_prime);

/**
 * Closed-form displacement of the rate equation, `rate_v' / (rate_v + rate_v')`.
 *
 * # Safety
 * `out` must be a writable `double`.
 */
enum QwalkStatus qwalk_analytic_displacement(double rate_v,
                                             double rate_v_prime,
                                             double gamma,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWALK_H */
