#ifndef TWOPHASE_H
#define TWOPHASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TpSide {
  /**
   * Upper fluid, `x_N > 0`.
   */
  TP_SIDE_PLUS = 0,
  /**
   * Lower fluid, `x_N < 0`.
   */
  TP_SIDE_MINUS = 1,
} TpSide;

typedef enum TpStatus {
  TP_STATUS_OK = 0,
  /**
   * Null pointer, bad length or out-of-range scalar.
   */
  TP_STATUS_INVALID_ARGUMENT = 1,
  TP_STATUS_INVALID_PARAMS = 2,
  TP_STATUS_DEGENERATE_SYMBOL = 3,
  TP_STATUS_QUADRATURE_FAILURE = 4,
  TP_STATUS_ROOT_FAILURE = 5,
  TP_STATUS_CALIBRATION_FAILURE = 6,
  TP_STATUS_NUMERICAL_FAILURE = 7,
  TP_STATUS_PANIC = 8,
} TpStatus;

/**
 * Opaque solver handle.
 */
typedef struct TpSolver TpSolver;

typedef struct TpFluids {
  double rho_plus;
  double rho_minus;
  double mu_plus;
  double mu_minus;
  double sigma;
  double gravity;
} TpFluids;

typedef struct TpComplex {
  double re;
  double im;
} TpComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a solver for the given fluids and calibrate its frequency bands up
 * to `a_max`. On success `*out` owns the handle; release it with
 * `tp_solver_free`.
 *
 * # Safety
 * `fluids` and `out` must be valid pointers.
 */
enum TpStatus tp_solver_new(const struct TpFluids *fluids, double a_max, struct TpSolver **out);

/**
 * Release a solver. Null is ignored.
 *
 * # Safety
 * `solver` must come from `tp_solver_new` and not be used afterwards.
 */
void tp_solver_free(struct TpSolver *solver);

/**
 * Contour quadrature tolerance relative to the data magnitude.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum TpStatus tp_solver_set_tolerance(struct TpSolver *solver, double rel_tol);

/**
 * Low and high band cutoffs.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_solver_cutoffs(const struct TpSolver *solver, double *a0, double *a_inf);

/**
 * Boundary symbol `L(A, λ)`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_symbol_l(const struct TpSolver *solver,
                          double a,
                          struct TpComplex lambda,
                          struct TpComplex *out);

/**
 * The two slow roots `λ±(A)` for `0 < A`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_roots(const struct TpSolver *solver,
                       double a,
                       struct TpComplex *plus,
                       struct TpComplex *minus);

/**
 * Height transform `η̂(ξ′, t)` for initial height transform `d_hat`, all
 * bands, no body force. `dim` is `N − 1`.
 *
 * # Safety
 * `xi` must point to `dim` doubles; other pointers must be valid.
 */
enum TpStatus tp_eta_hat(const struct TpSolver *solver,
                         const double *xi,
                         uintptr_t dim,
                         struct TpComplex d_hat,
                         double t,
                         struct TpComplex *out);

/**
 * Velocity transform `û(ξ′, x_N, t)` (`dim + 1` components, normal last)
 * and the interface-driven pressure at one normal position.
 *
 * # Safety
 * `xi` must point to `dim` doubles and `u_out` to `dim + 1` writable
 * values; `p_out` may be null.
 */
enum TpStatus tp_velocity_hat(const struct TpSolver *solver,
                              const double *xi,
                              uintptr_t dim,
                              struct TpComplex d_hat,
                              double t,
                              enum TpSide side,
                              double x_n,
                              struct TpComplex *u_out,
                              struct TpComplex *p_out);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null.
 */
uintptr_t tp_last_error_message(char *buf, uintptr_t len);

/**
 * Static name of a status code.
 */
const char *tp_status_name(enum TpStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOPHASE_H */
