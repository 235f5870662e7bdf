#ifndef MIMO_WIRETAP_H
#define MIMO_WIRETAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WtStatus {
  WT_STATUS_OK = 0,
  WT_STATUS_NULL_POINTER = 1,
  WT_STATUS_INVALID_ARGUMENT = 2,
  WT_STATUS_DIMENSION_MISMATCH = 3,
  WT_STATUS_NUMERICAL = 4,
  WT_STATUS_PANIC = 5,
} WtStatus;

typedef enum WtAlgorithm {
  WT_ALGORITHM_ADCA = 0,
  WT_ALGORITHM_PBRA = 1,
  WT_ALGORITHM_DCA = 2,
} WtAlgorithm;

/**
 * Opaque channel pair.
 */
typedef struct WtChannel WtChannel;

/**
 * Opaque solver result.
 */
typedef struct WtResult WtResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *wt_last_error_message(void);

/**
 * Builds a channel pair from row-major `n_r x n_t` and `n_e x n_t`
 * matrices. Imaginary parts may be null.
 *
 * # Safety
 * Non-null array arguments must point to `n_r * n_t` (Bob) or `n_e * n_t`
 * (Eve) readable doubles; `out` must be writable.
 */
enum WtStatus wt_channel_new(size_t n_t,
                             size_t n_r,
                             size_t n_e,
                             const double *h_b_re,
                             const double *h_b_im,
                             const double *h_e_re,
                             const double *h_e_im,
                             struct WtChannel **out);

/**
 * Draws a Kronecker-correlated channel pair with correlation magnitude
 * `r`, eavesdropper strength `gamma` and the default correlation phases.
 *
 * # Safety
 * `out` must be writable.
 */
enum WtStatus wt_channel_sample(size_t n_t,
                                size_t n_r,
                                size_t n_e,
                                double r,
                                double gamma,
                                uint64_t seed,
                                struct WtChannel **out);

/**
 * # Safety
 * `ch` must come from this library and not be used afterwards; null is a no-op.
 */
void wt_channel_free(struct WtChannel *ch);

/**
 * # Safety
 * `ch` must be a live handle; output pointers may be null.
 */
enum WtStatus wt_channel_dims(const struct WtChannel *ch, size_t *n_t, size_t *n_r, size_t *n_e);

/**
 * Solves for the secrecy capacity under the sum power `p0` (linear scale).
 * `q` is the monitor depth of the accelerated DC method.
 *
 * # Safety
 * `ch` must be a live handle and `out` writable.
 */
enum WtStatus wt_solve(const struct WtChannel *ch,
                       enum WtAlgorithm algorithm,
                       double p0,
                       size_t q,
                       struct WtResult **out);

/**
 * # Safety
 * `res` must come from [`wt_solve`] and not be used afterwards; null is a no-op.
 */
void wt_result_free(struct WtResult *res);

/**
 * Secrecy rate in nats.
 *
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum WtStatus wt_result_secrecy_rate(const struct WtResult *res, double *out);

/**
 * Final minimax value; `NaN` for the DC methods, which do not produce one.
 *
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum WtStatus wt_result_minimax_value(const struct WtResult *res, double *out);

/**
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum WtStatus wt_result_iterations(const struct WtResult *res, size_t *out);

/**
 * Copies the optimal covariance (row-major, `n_t * n_t` entries) into
 * `re` and `im`; `len` is the capacity of each buffer.
 *
 * # Safety
 * `re` and `im` must each point to `len` writable doubles.
 */
enum WtStatus wt_result_covariance(const struct WtResult *res, double *re, double *im, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIMO_WIRETAP_H */
