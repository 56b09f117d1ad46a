#ifndef MOTIONGUIDE_H
#define MOTIONGUIDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by all functions.
 */
typedef enum MgStatus {
  MG_OK = 0,
  MG_ERR_NULL_POINTER = 1,
  MG_ERR_INVALID_ARGUMENT = 2,
  MG_ERR_CONFIG = 3,
  MG_ERR_DIMENSION = 4,
  MG_ERR_ESTIMATION = 5,
  MG_ERR_BUFFER_TOO_SMALL = 6,
  MG_ERR_NO_RESULT = 7,
  MG_ERR_INTERNAL = 8,
} MgStatus;

/**
 * Opaque streaming pipeline.
 */
typedef struct MgPipeline MgPipeline;

/**
 * Summary of the most recent frame pushed into a pipeline.
 */
typedef struct MgFrameInfo {
  uint64_t index;
  /**
   * Nonzero while the ring is still filling; the mask is then empty.
   */
  uint8_t warmup;
  /**
   * Nonzero when a homography had to be replaced by the fallback policy.
   */
  uint8_t fallback;
  /**
   * Nonzero when `step_homography` holds `H_{t,t-1}`.
   */
  uint8_t has_step_homography;
  size_t matching_passes;
  size_t mask_pixels;
  size_t width;
  size_t height;
  /**
   * Row-major 3x3 matrix mapping current to previous frame coordinates.
   */
  double step_homography[9];
} MgFrameInfo;

/**
 * Cumulative instrumentation counters of a pipeline.
 */
typedef struct MgCounters {
  size_t frames;
  size_t feature_extractions;
  size_t matching_passes;
  size_t ransac_calls;
  size_t fallbacks;
} MgCounters;

/**
 * Content placement inside a letterboxed image.
 */
typedef struct MgPlacement {
  double scale;
  size_t offset_x;
  size_t offset_y;
  size_t content_width;
  size_t content_height;
} MgPlacement;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *mg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mg_version(void);

/**
 * Creates a pipeline from a JSON config (null for defaults).
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; `out` must be writable.
 */
enum MgStatus mg_pipeline_new(const char *config_json, struct MgPipeline **out);

/**
 * Releases a pipeline. Null is ignored.
 *
 * # Safety
 * `pipeline` must come from [`mg_pipeline_new`] and not be used afterwards.
 */
void mg_pipeline_free(struct MgPipeline *pipeline);

/**
 * Pushes one 8-bit grayscale frame and runs the pipeline on it.
 *
 * # Safety
 * `pipeline` must be a live handle; `data` must cover the strided image;
 * `info` may be null.
 */
enum MgStatus mg_pipeline_push_gray(struct MgPipeline *pipeline,
                                    const uint8_t *data,
                                    size_t width,
                                    size_t height,
                                    size_t stride,
                                    struct MgFrameInfo *info);

/**
 * Copies the most recent mask (values 0 or 1, row-major) into `out`.
 *
 * # Safety
 * `pipeline` must be a live handle and `out` must hold `len` bytes.
 */
enum MgStatus mg_pipeline_last_mask(const struct MgPipeline *pipeline, uint8_t *out, size_t len);

/**
 * Reads the cumulative counters.
 *
 * # Safety
 * `pipeline` must be a live handle and `out` writable.
 */
enum MgStatus mg_pipeline_counters(const struct MgPipeline *pipeline, struct MgCounters *out);

/**
 * Chains `count` step homographies given newest first
 * (`H_{t,t-1}, H_{t-1,t-2}, ...`, nine row-major doubles each) into
 * `H_{t,t-count}`.
 *
 * # Safety
 * `steps` must hold `9 * count` doubles and `out` nine writable doubles.
 */
enum MgStatus mg_cascade_homographies(const double *steps, size_t count, double *out);

/**
 * Runs dual-interval motion extraction on three tightly packed grayscale
 * frames. `params_json` may be null for default parameters. `mask_out`
 * receives `width * height` bytes of 0 or 1.
 *
 * # Safety
 * Image pointers must hold `width * height` bytes, homography pointers nine
 * doubles, and `mask_out` `width * height` writable bytes.
 */
enum MgStatus mg_extract_motion_mask(const uint8_t *cur,
                                     const uint8_t *ref_short,
                                     const uint8_t *ref_long,
                                     size_t width,
                                     size_t height,
                                     const double *h_short,
                                     const double *h_long,
                                     const char *params_json,
                                     uint8_t *mask_out);

/**
 * Letterboxes a packed RGB image and its mask into `target_width` by
 * `target_height`, writing interleaved R, G, B, motion bytes to `out`.
 * RGB padding is 114 and motion padding is 0.
 *
 * # Safety
 * `rgb` must hold `3 * width * height` bytes, `mask` `width * height` bytes,
 * `out` `4 * target_width * target_height` writable bytes; `placement` may
 * be null.
 */
enum MgStatus mg_letterbox(const uint8_t *rgb,
                           const uint8_t *mask,
                           size_t width,
                           size_t height,
                           size_t target_width,
                           size_t target_height,
                           uint8_t *out,
                           struct MgPlacement *placement);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOTIONGUIDE_H */
