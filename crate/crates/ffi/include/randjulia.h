#ifndef RANDJULIA_H
#define RANDJULIA_H

/* Generated by cbindgen from the randjulia-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RjStatus {
  RJ_STATUS_OK = 0,
  RJ_STATUS_NULL_POINTER = 1,
  RJ_STATUS_INVALID_ARGUMENT = 2,
  RJ_STATUS_PARSE = 3,
  RJ_STATUS_INSUFFICIENT_DATA = 4,
  RJ_STATUS_PANIC = 5,
} RjStatus;

typedef struct RjRegion RjRegion;

typedef struct RjSequence RjSequence;

typedef struct RjTailCurve RjTailCurve;

typedef struct RjConstants {
  double r;
  double r0;
  double tilde_r0;
  double g;
} RjConstants;

typedef struct RjComplex {
  double re;
  double im;
} RjComplex;

/**
 * `escaped` is 1 when the orbit left the disk of radius R0 at step `k`;
 * otherwise `k` holds the horizon.
 */
typedef struct RjEscape {
  int32_t escaped;
  uint32_t k;
  struct RjComplex point;
} RjEscape;

/**
 * `value` and `abs_error` are 0 for orbits bounded through the horizon.
 */
typedef struct RjGreen {
  int32_t escaped;
  uint32_t k;
  double value;
  double abs_error;
} RjGreen;

typedef struct RjComponents {
  size_t component_count;
  size_t largest;
  double max_diameter;
} RjComponents;

typedef struct RjGammaFit {
  double gamma_hat;
  double intercept;
  uint32_t k_first;
  uint32_t k_last;
  size_t points;
  double rms_residual;
} RjGammaFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The last error message on this thread. The pointer stays valid until the
 * next failing call on the same thread.
 */
const char *rj_last_error_message(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum RjStatus rj_constants_derive(double r, struct RjConstants *out);

/**
 * # Safety
 * `source` must be a nul-terminated string and `out` valid for writes.
 */
enum RjStatus rj_region_parse(const char *source, struct RjRegion **out);

/**
 * # Safety
 * `region` must come from [`rj_region_parse`] and not be used afterwards.
 */
void rj_region_free(struct RjRegion *region);

/**
 * # Safety
 * `region` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_region_contains(const struct RjRegion *region, struct RjComplex c, int32_t *out);

/**
 * # Safety
 * `region` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_region_bounding_radius(const struct RjRegion *region, double *out);

/**
 * Uniform draw from the region, a pure function of its three counters.
 *
 * # Safety
 * `region` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_region_sample(const struct RjRegion *region,
                               uint64_t master_seed,
                               uint64_t stream,
                               uint64_t draw,
                               struct RjComplex *out);

/**
 * # Safety
 * `source` must be a nul-terminated string and `out` valid for writes.
 */
enum RjStatus rj_sequence_parse(const char *source, uint64_t master_seed, struct RjSequence **out);

/**
 * # Safety
 * `seq` must come from [`rj_sequence_parse`] and not be used afterwards.
 */
void rj_sequence_free(struct RjSequence *seq);

/**
 * # Safety
 * `seq` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_sequence_at(const struct RjSequence *seq, uint64_t i, struct RjComplex *out);

/**
 * # Safety
 * `seq` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_sequence_bound(const struct RjSequence *seq, double *out);

/**
 * # Safety
 * `seq` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_escape_time(const struct RjSequence *seq,
                             struct RjComplex z,
                             double r,
                             uint32_t n_max,
                             struct RjEscape *out);

/**
 * # Safety
 * `seq` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_green(const struct RjSequence *seq,
                       struct RjComplex z,
                       double r,
                       uint32_t n_max,
                       double tol,
                       struct RjGreen *out);

/**
 * Connected components of the escape-time grid over the square with
 * center `center` and half-width `half_width`.
 *
 * # Safety
 * `seq` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_components(const struct RjSequence *seq,
                            double r,
                            struct RjComplex center,
                            double half_width,
                            size_t resolution,
                            uint32_t n_max,
                            struct RjComponents *out);

/**
 * Survival curve of the critical escape time (`fast_escape_green` = 0) or
 * of the fast-escape event (`fast_escape_green` = 1).
 *
 * # Safety
 * `region` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_tail_sample(const struct RjRegion *region,
                             uint64_t samples,
                             uint32_t k_max,
                             uint32_t n_max,
                             uint64_t master_seed,
                             int32_t fast_escape_green,
                             struct RjTailCurve **out);

/**
 * # Safety
 * `curve` must come from [`rj_tail_sample`] and not be used afterwards.
 */
void rj_tail_free(struct RjTailCurve *curve);

/**
 * Number of levels in the curve, `k_max + 1`.
 *
 * # Safety
 * `curve` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_tail_len(const struct RjTailCurve *curve, size_t *out);

/**
 * # Safety
 * `curve` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_tail_survival(const struct RjTailCurve *curve, size_t k, double *out);

/**
 * # Safety
 * `curve` must be a live handle and `out` valid for writes.
 */
enum RjStatus rj_tail_fit_gamma(const struct RjTailCurve *curve,
                                uint32_t k_lo,
                                uint64_t min_survivors,
                                struct RjGammaFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDJULIA_H */
