#ifndef FCG_H
#define FCG_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero error classes match the command-line exit codes.
 */
typedef enum FcgStatus {
  FCG_STATUS_OK = 0,
  FCG_STATUS_CONFIG = 2,
  FCG_STATUS_IO = 3,
  FCG_STATUS_VERSION = 4,
  FCG_STATUS_FORMAT = 5,
  FCG_STATUS_MISSING = 6,
  FCG_STATUS_SHAPE = 7,
  FCG_STATUS_DOMAIN = 8,
  FCG_STATUS_NUMERICAL = 9,
  FCG_STATUS_NULL_POINTER = 10,
  FCG_STATUS_INVALID_ARGUMENT = 11,
  FCG_STATUS_PANIC = 12,
} FcgStatus;

/**
 * A crack-pattern library loaded from disk.
 */
typedef struct FcgLibrary FcgLibrary;

/**
 * A trained model bundle. Sessions keep their own reference, so the model
 * may be freed while sessions are alive.
 */
typedef struct FcgModel FcgModel;

/**
 * Simulated crack path on the default plate and material.
 */
typedef struct FcgPath FcgPath;

/**
 * A digital-twin session fed with observed frames.
 */
typedef struct FcgSession FcgSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *fcg_last_error_message(void);

/**
 * Kink angle (radians) for the given stress intensity factors.
 *
 * # Safety
 * `out_angle` must be null or point to writable memory.
 */
enum FcgStatus fcg_deflection_angle(double k1, double k2, double *out_angle);

/**
 * Cycles to advance one step of `advance_step` metres at a constant
 * driving force, for Paris constants `paris_c`, `paris_m`.
 *
 * # Safety
 * `out_cycles` must be null or point to writable memory.
 */
enum FcgStatus fcg_paris_increment(double delta_k,
                                   double paris_c,
                                   double paris_m,
                                   double advance_step,
                                   double *out_cycles);

/**
 * Global SSIM of two equally long value buffers (range 1).
 *
 * # Safety
 * `pred` and `truth` must each hold `len` readable values.
 */
enum FcgStatus fcg_ssim(const double *pred, const double *truth, size_t len, double *out_ssim);

/**
 * Path RMSE over the unknown points `k..=n` after resampling both
 * polylines to `n` points. Polylines are interleaved (x, y) pairs;
 * `pred_len` and `truth_len` count doubles, not points.
 *
 * # Safety
 * Buffers must hold the stated number of doubles.
 */
enum FcgStatus fcg_path_rmse(const double *pred_xy,
                             size_t pred_len,
                             const double *truth_xy,
                             size_t truth_len,
                             size_t k,
                             size_t n,
                             double *out_rmse);

/**
 * log10 of the SAX word count for word length `w` and alphabet size `l`.
 *
 * # Safety
 * `out_log10` must be null or point to writable memory.
 */
enum FcgStatus fcg_data_complexity(size_t w, size_t l, double *out_log10);

/**
 * Grow a crack under constant tension and shear (MPa) split over
 * `n_slices` equal slices.
 *
 * # Safety
 * `out_path` must be null or point to writable memory. The handle is
 * released with [`fcg_path_free`].
 */
enum FcgStatus fcg_path_simulate(double tension,
                                 double shear,
                                 size_t n_slices,
                                 struct FcgPath **out_path);

/**
 * Number of tip positions, notch tip included.
 *
 * # Safety
 * `path` must be a live handle or null.
 */
enum FcgStatus fcg_path_len(const struct FcgPath *path, size_t *out_len);

/**
 * Tip position `index` in metres.
 *
 * # Safety
 * `path` must be a live handle or null; out-pointers writable or null.
 */
enum FcgStatus fcg_path_point(const struct FcgPath *path,
                              size_t index,
                              double *out_x,
                              double *out_y);

/**
 * Total cycles to reach the length limit.
 *
 * # Safety
 * `path` must be a live handle or null.
 */
enum FcgStatus fcg_path_total_life(const struct FcgPath *path, double *out_cycles);

/**
 * # Safety
 * `path` must come from [`fcg_path_simulate`] and not be used afterwards.
 */
void fcg_path_free(struct FcgPath *path);

/**
 * # Safety
 * `dir` must be a nul-terminated string; `out_library` writable or null.
 */
enum FcgStatus fcg_library_load(const char *dir, struct FcgLibrary **out_library);

/**
 * # Safety
 * `library` must be a live handle or null.
 */
enum FcgStatus fcg_library_sample_count(const struct FcgLibrary *library, size_t *out_count);

/**
 * # Safety
 * `library` must come from [`fcg_library_load`] and not be used afterwards.
 */
void fcg_library_free(struct FcgLibrary *library);

/**
 * # Safety
 * `dir` must be a nul-terminated string; `out_model` writable or null.
 */
enum FcgStatus fcg_model_load(const char *dir, struct FcgModel **out_model);

/**
 * Grid size the model expects.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
enum FcgStatus fcg_model_resolution(const struct FcgModel *model,
                                    size_t *out_rows,
                                    size_t *out_cols);

/**
 * # Safety
 * `model` must come from [`fcg_model_load`] and not be used afterwards.
 */
void fcg_model_free(struct FcgModel *model);

/**
 * # Safety
 * `model` must be a live handle or null; `out_session` writable or null.
 */
enum FcgStatus fcg_session_new(const struct FcgModel *model, struct FcgSession **out_session);

/**
 * Feed one row-major frame of `len` values observed at `step_index` and
 * issue a fresh prediction. Writes the predicted remaining life and the
 * number of forecast frames.
 *
 * # Safety
 * `session` must be a live handle or null; `values` must hold `len` floats.
 */
enum FcgStatus fcg_session_observe(struct FcgSession *session,
                                   const float *values,
                                   size_t len,
                                   size_t step_index,
                                   double *out_remaining_life,
                                   size_t *out_n_frames);

/**
 * Copy forecast frame `index` of the latest prediction into `out_values`
 * (`len` must equal rows·cols).
 *
 * # Safety
 * `session` must be a live handle or null; `out_values` must hold `len`
 * writable floats.
 */
enum FcgStatus fcg_session_predicted_frame(const struct FcgSession *session,
                                           size_t index,
                                           float *out_values,
                                           size_t len);

/**
 * # Safety
 * `session` must come from [`fcg_session_new`] and not be used afterwards.
 */
void fcg_session_free(struct FcgSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FCG_H */
