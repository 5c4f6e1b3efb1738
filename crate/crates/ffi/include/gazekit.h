#ifndef GAZEKIT_H
#define GAZEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GkStatus {
  GK_STATUS_OK = 0,
  GK_STATUS_NULL_POINTER = 1,
  GK_STATUS_INVALID_ARGUMENT = 2,
  GK_STATUS_DIMENSION_MISMATCH = 3,
  GK_STATUS_EMPTY_INPUT = 4,
  GK_STATUS_ZERO_VARIANCE = 5,
  GK_STATUS_NOT_NORMALIZED = 6,
  GK_STATUS_OUT_OF_BOUNDS = 7,
  GK_STATUS_FORMAT = 8,
  GK_STATUS_BUFFER_TOO_SMALL = 9,
  GK_STATUS_PANIC = 10,
} GkStatus;

typedef enum GkNormalization {
  GK_NORMALIZATION_ALIGNED_PAIRS = 0,
  GK_NORMALIZATION_STEPS = 1,
} GkNormalization;

typedef enum GkPooling {
  GK_POOLING_MEAN_SCALED = 0,
  GK_POOLING_CONVEX = 1,
} GkPooling;

/**
 * A 2-D grid of doubles.
 */
typedef struct GkGrid GkGrid;

/**
 * `count` grids of one size.
 */
typedef struct GkStack GkStack;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *gk_last_error_message(void);

/**
 * Creates a `width × height` grid from `width * height` row-major values.
 *
 * # Safety
 * `values` must point to `width * height` doubles; `out` must be writable.
 */
enum GkStatus gk_grid_new(size_t width, size_t height, const double *values, struct GkGrid **out);

/**
 * # Safety
 * `grid` must come from this library and not be freed twice. Null is ignored.
 */
void gk_grid_free(struct GkGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle.
 */
size_t gk_grid_width(const struct GkGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle.
 */
size_t gk_grid_height(const struct GkGrid *grid);

/**
 * Copies the grid's row-major values into `out` (`len` doubles).
 *
 * # Safety
 * `grid` must be a live handle and `out` must hold `len` doubles.
 */
enum GkStatus gk_grid_copy_values(const struct GkGrid *grid, double *out, size_t len);

/**
 * Gaussian saliency map (unit sum) of `n` fixations.
 *
 * # Safety
 * `xs` and `ys` must hold `n` entries; `out` must be writable.
 */
enum GkStatus gk_salmap_from_fixations(const size_t *xs,
                                       const size_t *ys,
                                       size_t n,
                                       size_t width,
                                       size_t height,
                                       double sigma,
                                       struct GkGrid **out);

/**
 * # Safety
 * `map` must be a live handle, `xs`/`ys` hold `n` entries, `out` writable.
 */
enum GkStatus gk_nss(const struct GkGrid *map,
                     const size_t *xs,
                     const size_t *ys,
                     size_t n,
                     double *out);

/**
 * # Safety
 * As [`gk_nss`].
 */
enum GkStatus gk_auc_judd(const struct GkGrid *map,
                          const size_t *xs,
                          const size_t *ys,
                          size_t n,
                          double *out);

/**
 * Shuffled AUC with negatives drawn from the pool; deterministic in `seed`.
 *
 * # Safety
 * As [`gk_nss`]; `pool_xs`/`pool_ys` hold `pool_n` entries.
 */
enum GkStatus gk_shuffled_auc(const struct GkGrid *map,
                              const size_t *xs,
                              const size_t *ys,
                              size_t n,
                              const size_t *pool_xs,
                              const size_t *pool_ys,
                              size_t pool_n,
                              size_t n_splits,
                              uint64_t seed,
                              double *out);

/**
 * SIM of two unit-sum grids.
 *
 * # Safety
 * Both handles must be live; `out` writable.
 */
enum GkStatus gk_sim(const struct GkGrid *a, const struct GkGrid *b, double *out);

/**
 * Spearman rank correlation of two length-`n` samples.
 *
 * # Safety
 * `xs` and `ys` must hold `n` doubles; `out` writable.
 */
enum GkStatus gk_spearman(const double *xs, const double *ys, size_t n, double *out);

/**
 * Winner-take-all selection. Writes up to `capacity` locations and the
 * number selected to `out_count`.
 *
 * # Safety
 * `map` must be live; `out_xs`/`out_ys` hold `capacity` entries.
 */
enum GkStatus gk_wta(const struct GkGrid *map,
                     size_t n,
                     double suppress_radius,
                     double floor,
                     size_t *out_xs,
                     size_t *out_ys,
                     size_t capacity,
                     size_t *out_count);

/**
 * Creates a stack of `count` grids of `width × height` from grid-major,
 * row-major data.
 *
 * # Safety
 * `data` must hold `count * width * height` doubles; `out` writable.
 */
enum GkStatus gk_stack_new(size_t count,
                           size_t width,
                           size_t height,
                           const double *data,
                           struct GkStack **out);

/**
 * # Safety
 * `stack` must come from this library and not be freed twice. Null is ignored.
 */
void gk_stack_free(struct GkStack *stack);

/**
 * # Safety
 * `stack` must be a live handle.
 */
size_t gk_stack_count(const struct GkStack *stack);

/**
 * # Safety
 * `stack` must be a live handle.
 */
size_t gk_stack_width(const struct GkStack *stack);

/**
 * # Safety
 * `stack` must be a live handle.
 */
size_t gk_stack_height(const struct GkStack *stack);

/**
 * Copies all values (grid-major, row-major) into `out`.
 *
 * # Safety
 * `stack` must be live and `out` must hold `len` doubles.
 */
enum GkStatus gk_stack_copy_data(const struct GkStack *stack, double *out, size_t len);

/**
 * Parses FGRID bytes into a stack.
 *
 * # Safety
 * `bytes` must hold `len` bytes; `out` writable.
 */
enum GkStatus gk_fgrid_read(const uint8_t *bytes, size_t len, struct GkStack **out);

/**
 * Serializes a stack as FGRID. Release the buffer with [`gk_bytes_free`].
 *
 * # Safety
 * `stack` must be live; `out_bytes` and `out_len` writable.
 */
enum GkStatus gk_fgrid_write(const struct GkStack *stack, uint8_t **out_bytes, size_t *out_len);

/**
 * # Safety
 * `bytes`/`len` must come from [`gk_fgrid_write`]. Null is ignored.
 */
void gk_bytes_free(uint8_t *bytes, size_t len);

/**
 * DTW distance between two attention sequences, each grid one frame
 * (renormalized to unit sum). Optionally reports the path length.
 *
 * # Safety
 * Both handles must be live; `out_distance` writable; `out_path_len` may be null.
 */
enum GkStatus gk_dtw(const struct GkStack *a,
                     const struct GkStack *b,
                     enum GkNormalization normalization,
                     double *out_distance,
                     size_t *out_path_len);

/**
 * Samples a `size × size` patch from every grid through the affine map
 * `[t0 t1 t2; t3 t4 t5]` in normalized coordinates (`t2`, `t5` = centre).
 *
 * # Safety
 * `stack` must be live, `theta` must hold 6 doubles, `out` writable.
 */
enum GkStatus gk_sample_patch(const struct GkStack *stack,
                              const double *theta,
                              size_t size,
                              struct GkStack **out);

/**
 * Soft attention with a dot-product scorer over `n` feature vectors of
 * length `k` (row-major in `features`) and a length-`k` state. Writes `n`
 * weights and `k` pooled values.
 *
 * # Safety
 * Buffers must have the stated lengths.
 */
enum GkStatus gk_soft_attention(const double *features,
                                size_t n,
                                size_t k,
                                const double *state,
                                enum GkPooling pooling,
                                double *out_weights,
                                double *out_pooled);

/**
 * Unit-sum copy of a grid as a new handle.
 *
 * # Safety
 * `grid` must be live; `out` writable.
 */
enum GkStatus gk_grid_normalized(const struct GkGrid *grid, struct GkGrid **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZEKIT_H */
