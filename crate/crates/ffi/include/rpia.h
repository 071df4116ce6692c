#ifndef RPIA_H
#define RPIA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum RpiaStatus {
  RPIA_STATUS_OK = 0,
  RPIA_STATUS_NULL_POINTER = 1,
  RPIA_STATUS_INVALID_ARGUMENT = 2,
  RPIA_STATUS_SHAPE = 3,
  RPIA_STATUS_DOMAIN = 4,
  RPIA_STATUS_DEGENERATE_DATA = 5,
  RPIA_STATUS_CONFIG = 6,
  RPIA_STATUS_RANK = 7,
  RPIA_STATUS_DEGENERATE_START = 8,
  RPIA_STATUS_PARSE = 9,
  RPIA_STATUS_IO = 10,
  RPIA_STATUS_BUFFER_TOO_SMALL = 11,
  RPIA_STATUS_PANIC = 12,
} RpiaStatus;

typedef enum RpiaMethod {
  RPIA_METHOD_RPIA = 0,
  RPIA_METHOD_LSPIA = 1,
  RPIA_METHOD_SLSPIA = 2,
  RPIA_METHOD_MLSPIA = 3,
} RpiaMethod;

typedef struct RpiaCurveProblem RpiaCurveProblem;

typedef struct RpiaFitResult RpiaFitResult;

typedef struct RpiaSurfaceProblem RpiaSurfaceProblem;

/**
 * Mirrors the core fit options.
 */
typedef struct RpiaFitOptions {
  double tol;
  size_t max_iter;
  size_t refresh_interval;
  uint64_t seed;
} RpiaFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rpia_last_error_message(void);

/**
 * Defaults: tolerance 1e-6, cap 10^4, refresh every 1000 iterations, seed 0.
 */
struct RpiaFitOptions rpia_fit_options_default(void);

/**
 * Samples benchmark curve `id` (1-4) at `m + 1` points into `buf`
 * (row-major, `(m + 1) x dim`).
 *
 * # Safety
 * `buf` must be null or writable for `cap` doubles; `out_len` and `out_dim`
 * must be null or valid for writes.
 */
enum RpiaStatus rpia_gen_curve(uint8_t id,
                               size_t m,
                               double *buf,
                               size_t cap,
                               size_t *out_len,
                               size_t *out_dim);

/**
 * Samples benchmark surface `id` (5-8) on an `(m + 1) x (p + 1)` grid into
 * `buf` (row-major, coordinate fastest).
 *
 * # Safety
 * `buf` must be null or writable for `cap` doubles; `out_len` must be null
 * or valid for writes.
 */
enum RpiaStatus rpia_gen_surface(uint8_t id,
                                 size_t m,
                                 size_t p,
                                 double *buf,
                                 size_t cap,
                                 size_t *out_len);

/**
 * Builds a curve problem with `n + 1` control points from `count` points of
 * dimension `dim` (2 or 3).
 *
 * # Safety
 * `points` must be readable for `count * dim` doubles and `out` writable.
 */
enum RpiaStatus rpia_curve_problem_new(const double *points,
                                       size_t count,
                                       size_t dim,
                                       size_t n,
                                       struct RpiaCurveProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`rpia_curve_problem_new`] not
 * yet freed.
 */
void rpia_curve_problem_free(struct RpiaCurveProblem *problem);

/**
 * Builds a surface problem with an `(n + 1) x (n + 1)` net from a
 * `rows x cols` grid.
 *
 * # Safety
 * `points` must be readable for `rows * cols * 3` doubles and `out`
 * writable.
 */
enum RpiaStatus rpia_surface_problem_new(const double *points,
                                         size_t rows,
                                         size_t cols,
                                         size_t n,
                                         struct RpiaSurfaceProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`rpia_surface_problem_new`] not
 * yet freed.
 */
void rpia_surface_problem_free(struct RpiaSurfaceProblem *problem);

/**
 * Fits a curve problem. `tau` is the block size and is read for
 * [`RpiaMethod::Rpia`] only. `opts` may be null for defaults.
 *
 * # Safety
 * `problem` must be a live handle, `opts` null or valid, `out` writable.
 */
enum RpiaStatus rpia_curve_fit(const struct RpiaCurveProblem *problem,
                               enum RpiaMethod method,
                               size_t tau,
                               const struct RpiaFitOptions *opts,
                               struct RpiaFitResult **out);

/**
 * Fits a surface problem with [`RpiaMethod::Rpia`] or
 * [`RpiaMethod::Lspia`].
 *
 * # Safety
 * As for [`rpia_curve_fit`].
 */
enum RpiaStatus rpia_surface_fit(const struct RpiaSurfaceProblem *problem,
                                 enum RpiaMethod method,
                                 size_t tau,
                                 const struct RpiaFitOptions *opts,
                                 struct RpiaFitResult **out);

/**
 * # Safety
 * `result` must be null or a handle from a fit call not yet freed.
 */
void rpia_fit_result_free(struct RpiaFitResult *result);

/**
 * Iterations performed, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t rpia_fit_result_iterations(const struct RpiaFitResult *result);

/**
 * Relative error at the last iteration, or NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double rpia_fit_result_final_error(const struct RpiaFitResult *result);

/**
 * True when the run stopped on the tolerance rather than the cap.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
bool rpia_fit_result_converged(const struct RpiaFitResult *result);

/**
 * Copies the relative-error history (`iterations + 1` values).
 *
 * # Safety
 * `result` must be a live handle; `buf` null or writable for `cap`
 * doubles; `out_len` null or writable.
 */
enum RpiaStatus rpia_fit_result_errors(const struct RpiaFitResult *result,
                                       double *buf,
                                       size_t cap,
                                       size_t *out_len);

/**
 * Copies the final control points: `(n + 1) x dim` for curves,
 * `(n + 1) x (n + 1) x 3` for surfaces, row-major.
 *
 * # Safety
 * As for [`rpia_fit_result_errors`].
 */
enum RpiaStatus rpia_fit_result_controls(const struct RpiaFitResult *result,
                                         double *buf,
                                         size_t cap,
                                         size_t *out_len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rpia_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RPIA_H */
