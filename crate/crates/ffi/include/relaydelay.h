#ifndef RELAYDELAY_H
#define RELAYDELAY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first five match the command-line exit codes.
 */
typedef enum RdStatus {
  RD_STATUS_OK = 0,
  RD_STATUS_IO = 1,
  RD_STATUS_BAD_INPUT = 2,
  RD_STATUS_ENGINE_GUARD = 3,
  RD_STATUS_UNSUPPORTED_CLASS = 4,
  RD_STATUS_CLASS_EXIT = 5,
  RD_STATUS_NULL_POINTER = 6,
  RD_STATUS_PANIC = 7,
} RdStatus;

typedef enum RdVariant {
  RD_VARIANT_PERIODIC_X0 = 0,
  RD_VARIANT_PERIODIC_Y0 = 1,
  RD_VARIANT_EXITS_CLASS = 2,
} RdVariant;

/**
 * Opaque simulated trajectory.
 */
typedef struct RdTrajectory RdTrajectory;

typedef struct RdConstants {
  double t0;
  double period;
  double theta_star;
  double tau_star;
} RdConstants;

/**
 * `shift` and `settle_time` are set for `PeriodicX0`, `at_iterate` for
 * `ExitsClass`; unused fields are zero.
 */
typedef struct RdClassification {
  enum RdVariant variant;
  double shift;
  double settle_time;
  size_t at_iterate;
} RdClassification;

typedef struct RdComplex {
  double re;
  double im;
} RdComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *rd_last_error(void);

size_t rd_default_event_cap(void);

/**
 * Simulates `x'(t) = R(x(t - 1))` on `[0, horizon]`.
 *
 * The initial function is given by its zeros in `[-1, 0]` (increasing), the
 * sign just right of `-1` (`-1` or `+1`) and `x(0)`. `event_cap == 0` selects
 * the default cap.
 *
 * # Safety
 * `zeros` must point to `n_zeros` readable doubles (or be null when
 * `n_zeros == 0`); `out` must be a valid pointer to writable storage.
 */
enum RdStatus rd_simulate(double a,
                          const double *zeros,
                          size_t n_zeros,
                          int32_t sign_left,
                          double x_end,
                          double horizon,
                          size_t event_cap,
                          struct RdTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from [`rd_simulate`] not yet freed.
 */
void rd_trajectory_free(struct RdTrajectory *traj);

/**
 * Number of breakpoints.
 *
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum RdStatus rd_trajectory_len(const struct RdTrajectory *traj, size_t *out);

/**
 * Copies up to `capacity` breakpoints into `t` and `x`; `written` receives
 * the number copied.
 *
 * # Safety
 * `traj` must be a live handle; `t` and `x` must each hold `capacity`
 * doubles; `written` must be writable.
 */
enum RdStatus rd_trajectory_breakpoints(const struct RdTrajectory *traj,
                                        double *t,
                                        double *x,
                                        size_t capacity,
                                        size_t *written);

/**
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum RdStatus rd_trajectory_eval(const struct RdTrajectory *traj, double t, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum RdStatus rd_constants(double a, struct RdConstants *out);

/**
 * One application of the return map to `(theta, tau)`. Fails with
 * `ClassExit` if the pair is not admissible.
 *
 * # Safety
 * `theta_out` and `tau_out` must be writable.
 */
enum RdStatus rd_phi_map(double a, double theta, double tau, double *theta_out, double *tau_out);

/**
 * Classifies the initial function (same encoding as [`rd_simulate`]) by
 * simulating up to `horizon`.
 *
 * # Safety
 * As for [`rd_simulate`]; `out` must be writable.
 */
enum RdStatus rd_classify(double a,
                          const double *zeros,
                          size_t n_zeros,
                          int32_t sign_left,
                          double x_end,
                          double horizon,
                          struct RdClassification *out);

/**
 * Multipliers `1, +i sqrt(T0), -i sqrt(T0)` of the short cycle and their
 * largest modulus.
 *
 * # Safety
 * `out` must hold three `RdComplex`; `max_modulus` must be writable.
 */
enum RdStatus rd_multipliers(double a, struct RdComplex *out, double *max_modulus);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAYDELAY_H */
