#ifndef MANIFOLD_KDE_H
#define MANIFOLD_KDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum KdeStatus {
  KDE_STATUS_OK = 0,
  KDE_STATUS_NULL_POINTER = 1,
  KDE_STATUS_INVALID_UTF8 = 2,
  KDE_STATUS_DOMAIN = 3,
  KDE_STATUS_ARGUMENT = 4,
  KDE_STATUS_CONFIGURATION = 5,
  KDE_STATUS_UNSUPPORTED = 6,
  KDE_STATUS_DEGENERATE_KERNEL = 7,
  KDE_STATUS_PARTITION_NOT_FOUND = 8,
  KDE_STATUS_NUMERICAL = 9,
  KDE_STATUS_DIMENSION_MISMATCH = 10,
  KDE_STATUS_PANIC = 11,
} KdeStatus;

// A sampling density on a manifold.
typedef struct KdeDensity KdeDensity;

// An estimator bound to a kernel, a bandwidth and a prepared sample.
typedef struct KdeEstimator KdeEstimator;

// A manifold from a descriptor such as `sphere:d=2`.
typedef struct KdeManifold KdeManifold;

// A batch of points, stored row-major with `kde_manifold_point_dim` coordinates each.
typedef struct KdeSampleSet KdeSampleSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated, truncated to fit)
// and returns the full message length in bytes, excluding the terminator.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t kde_last_error_message(char *buf, size_t len);

// # Safety
// `descriptor` must be a NUL-terminated string and `out` a valid pointer.
enum KdeStatus kde_manifold_new(const char *descriptor, struct KdeManifold **out);

// # Safety
// `m` must be null or a handle from `kde_manifold_new` not yet freed.
void kde_manifold_free(struct KdeManifold *m);

// Intrinsic dimension, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t kde_manifold_intrinsic_dim(const struct KdeManifold *m);

// Coordinates per point, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t kde_manifold_point_dim(const struct KdeManifold *m);

// # Safety
// `manifold` must be a live handle, `descriptor` a NUL-terminated string, `out` a valid pointer.
enum KdeStatus kde_density_new(const struct KdeManifold *manifold,
                               const char *descriptor,
                               struct KdeDensity **out);

// # Safety
// `d` must be null or a live handle.
void kde_density_free(struct KdeDensity *d);

// Density value at one point of `dim` coordinates.
//
// # Safety
// `point` must be valid for `dim` reads and `out` a valid pointer.
enum KdeStatus kde_density_evaluate(const struct KdeDensity *density,
                                    const double *point,
                                    size_t dim,
                                    double *out);

// Draws `n` points by rejection sampling; the same seed gives the same points.
//
// # Safety
// `density` must be a live handle and `out` a valid pointer.
enum KdeStatus kde_sample(const struct KdeDensity *density,
                          size_t n,
                          uint64_t seed,
                          struct KdeSampleSet **out);

// Wraps caller-provided points, `n` rows of `dim` coordinates.
//
// # Safety
// `points` must be valid for `n * dim` reads and `out` a valid pointer.
enum KdeStatus kde_samples_from_points(const double *points,
                                       size_t n,
                                       size_t dim,
                                       struct KdeSampleSet **out);

// # Safety
// `s` must be null or a live handle.
void kde_samples_free(struct KdeSampleSet *s);

// Number of points, or 0 for a null handle.
//
// # Safety
// `s` must be null or a live handle.
size_t kde_samples_len(const struct KdeSampleSet *s);

// Coordinates per point, or 0 for a null handle.
//
// # Safety
// `s` must be null or a live handle.
size_t kde_samples_dim(const struct KdeSampleSet *s);

// Copies the points row-major into `buf`, which must hold `len * dim` values.
//
// # Safety
// `buf` must be valid for `capacity` writes.
enum KdeStatus kde_samples_copy(const struct KdeSampleSet *s, double *buf, size_t capacity);

// Builds an estimator from a kernel descriptor and bandwidth, and indexes the samples.
// The sample set is copied, so it may be freed afterwards.
//
// # Safety
// Handles must be live, `kernel` NUL-terminated and `out` a valid pointer.
enum KdeStatus kde_estimator_new(const struct KdeManifold *manifold,
                                 const char *kernel,
                                 double eps,
                                 const struct KdeSampleSet *samples,
                                 struct KdeEstimator **out);

// # Safety
// `e` must be null or a live handle.
void kde_estimator_free(struct KdeEstimator *e);

// Estimates the density at `n` points of `dim` coordinates, writing `n` values to `out`.
//
// # Safety
// `points` must be valid for `n * dim` reads and `out` for `n` writes.
enum KdeStatus kde_estimate(const struct KdeEstimator *estimator,
                            const double *points,
                            size_t n,
                            size_t dim,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANIFOLD_KDE_H */
