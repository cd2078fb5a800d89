#ifndef EQUATOR_FORGE_H
#define EQUATOR_FORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum EfStatus {
  EF_STATUS_OK = 0,
  EF_STATUS_NULL_POINTER = 1,
  EF_STATUS_INVALID_UTF8 = 2,
  EF_STATUS_DIMENSION = 3,
  EF_STATUS_DOMAIN = 4,
  EF_STATUS_POSITIVITY = 5,
  EF_STATUS_SYMMETRY = 6,
  EF_STATUS_SAMPLING = 7,
  EF_STATUS_SINGULAR = 8,
  EF_STATUS_UNSUPPORTED = 9,
  EF_STATUS_FORMAT = 10,
  EF_STATUS_IO = 11,
  EF_STATUS_PANIC = 12,
} EfStatus;

/**
 * Opaque metric built from a curvature tensor.
 */
typedef struct EfMetric EfMetric;

/**
 * Opaque curvature tensor.
 */
typedef struct EfTensor EfTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread; do not free it.
 */
const char *ef_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ef_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *ef_version(void);

/**
 * Constant-curvature tensor on S^n.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EfStatus ef_tensor_round(size_t n, struct EfTensor **out_tensor);

/**
 * Fubini–Study tensor on S^(2m+1).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EfStatus ef_tensor_fubini_study(size_t m, struct EfTensor **out_tensor);

/**
 * Seeded random positive tensor at distance `eps` from the round one.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EfStatus ef_tensor_random(size_t n, double eps, uint64_t seed, struct EfTensor **out_tensor);

/**
 * Tensor from `(n+1)^4` row-major coefficients.
 *
 * # Safety
 * `coeffs` must point to `len` doubles and `out` must be valid.
 */
enum EfStatus ef_tensor_from_coeffs(size_t n,
                                    const double *coeffs,
                                    size_t len,
                                    struct EfTensor **out_tensor);

/**
 * Parses a `curv-dense-v1` JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` must be valid.
 */
enum EfStatus ef_tensor_from_json(const char *json, struct EfTensor **out_tensor);

/**
 * Serialises to `curv-dense-v1` JSON. Free the result with [`ef_string_free`].
 *
 * # Safety
 * `t` must be a live handle and `out` must be valid.
 */
enum EfStatus ef_tensor_to_json(const struct EfTensor *t, char **out_json);

/**
 * Sphere dimension n, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t ef_tensor_dim(const struct EfTensor *t);

/**
 * Copies the `(n+1)^4` coefficients into `buf`, which must hold at least that many.
 *
 * # Safety
 * `t` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum EfStatus ef_tensor_coeffs(const struct EfTensor *t, double *buf, size_t len);

/**
 * Sectional curvature of the plane spanned by `x` and `y` (each of length n+1).
 *
 * # Safety
 * `x` and `y` must point to `len` doubles, `t` must be live, `out` valid.
 */
enum EfStatus ef_tensor_sectional(const struct EfTensor *t,
                                  const double *x,
                                  const double *y,
                                  size_t len,
                                  double *out_value);

/**
 * Right action by the invertible `(n+1) x (n+1)` row-major matrix.
 *
 * # Safety
 * `matrix` must point to `len` doubles, `t` must be live, `out` valid.
 */
enum EfStatus ef_tensor_act(const struct EfTensor *t,
                            const double *matrix,
                            size_t len,
                            struct EfTensor **out_tensor);

/**
 * Runs the verification suite with default settings and the given seed.
 * Writes the report as JSON and whether every check passed.
 *
 * # Safety
 * `t` must be live; `out_json` and `out_pass` must be valid.
 */
enum EfStatus ef_tensor_verify(const struct EfTensor *t,
                               uint64_t seed,
                               char **out_json,
                               bool *out_pass);

/**
 * Releases a tensor handle. Null is ignored.
 *
 * # Safety
 * `t` must be null or a live handle that is not used afterwards.
 */
void ef_tensor_free(struct EfTensor *t);

/**
 * Metric generated by a positive tensor.
 *
 * # Safety
 * `t` must be live and `out` valid.
 */
enum EfStatus ef_metric_from_tensor(const struct EfTensor *t, struct EfMetric **out_metric);

/**
 * `g_p(v, w)` at the unit point `p` for ambient tangent vectors `v`, `w`.
 * All three arrays have length n+1.
 *
 * # Safety
 * The arrays must point to `len` doubles, `g` must be live, `out` valid.
 */
enum EfStatus ef_metric_eval(const struct EfMetric *g,
                             const double *p,
                             const double *v,
                             const double *w,
                             size_t len,
                             double *out_value);

/**
 * Ambient `(n+1) x (n+1)` matrix of the metric at `p`, row-major into `buf`.
 *
 * # Safety
 * `p` must point to `len` doubles, `buf` to `buf_len` writable doubles.
 */
enum EfStatus ef_metric_matrix(const struct EfMetric *g,
                               const double *p,
                               size_t len,
                               double *buf,
                               size_t buf_len);

/**
 * Releases a metric handle. Null is ignored.
 *
 * # Safety
 * `g` must be null or a live handle that is not used afterwards.
 */
void ef_metric_free(struct EfMetric *g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQUATOR_FORGE_H */
