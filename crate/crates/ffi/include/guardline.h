/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef GUARDLINE_H
#define GUARDLINE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum GlStatus {
  GL_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  GL_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  GL_STATUS_INVALID_UTF8 = 2,
  /**
   * An argument was out of range or inconsistent.
   */
  GL_STATUS_INVALID_ARGUMENT = 3,
  /**
   * An input document could not be parsed.
   */
  GL_STATUS_PARSE_ERROR = 4,
  /**
   * The engine rejected the input while processing it.
   */
  GL_STATUS_ENGINE_ERROR = 5,
  /**
   * A person lacks a usable shoulder line.
   */
  GL_STATUS_NOT_ASSESSABLE = 6,
  /**
   * The library panicked; the call had no effect.
   */
  GL_STATUS_PANIC = 7,
} GlStatus;

/**
 * Opaque engine handle.
 */
typedef struct GlEngine GlEngine;

/**
 * Opaque frame under construction.
 */
typedef struct GlFrame GlFrame;

typedef struct GlPoint {
  double x;
  double y;
} GlPoint;

typedef struct GlPairResult {
  double distance;
  double threshold;
  bool violation;
} GlPairResult;

/**
 * Axis-aligned box in pixels, `x_min <= x_max` and `y_min <= y_max`.
 */
typedef struct GlBox {
  double x_min;
  double y_min;
  double x_max;
  double y_max;
} GlBox;

/**
 * Counts taken from one processed frame.
 */
typedef struct GlFrameSummary {
  uint64_t frame_id;
  uint32_t face_count;
  uint32_t pair_count;
  uint32_t violating_pairs;
  uint32_t keeps;
  uint32_t violates;
  uint32_t unassessed;
  uint32_t warning_count;
} GlFrameSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failed call on this thread, or NULL if none
 * has failed yet. The pointer stays valid until the next failing call on
 * the same thread.
 */
const char *gl_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *gl_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void gl_string_free(char *s);

/**
 * Decides one pair of persons from their shoulder keypoints.
 *
 * `lambda` scales the mean shoulder width into the distance threshold. A
 * shoulder line shorter than the engine's minimum width gives
 * `GL_STATUS_NOT_ASSESSABLE`.
 */
enum GlStatus gl_assess_shoulders(struct GlPoint a_left,
                                  struct GlPoint a_right,
                                  struct GlPoint b_left,
                                  struct GlPoint b_right,
                                  double lambda,
                                  struct GlPairResult *out);

/**
 * Widens a face box by `margin` of its size on every side, optionally
 * clamped to a `width` x `height` image.
 */
enum GlStatus gl_expand_crop(struct GlBox face,
                             uint32_t width,
                             uint32_t height,
                             double margin,
                             bool clamp_to_image,
                             struct GlBox *out);

/**
 * Creates an engine.
 *
 * `config_toml` is the text of an engine configuration file, or NULL for
 * the defaults. `scores_jsonl` is the text of a recorded scores file, or
 * NULL for none, in which case every face is reported as a warning.
 */
enum GlStatus gl_engine_new(const char *config_toml,
                            const char *scores_jsonl,
                            struct GlEngine **out);

/**
 * Destroys an engine. NULL is ignored.
 */
void gl_engine_free(struct GlEngine *engine);

/**
 * Starts an empty frame of the given size.
 */
enum GlStatus gl_frame_new(uint64_t frame_id,
                           uint32_t width,
                           uint32_t height,
                           struct GlFrame **out);

/**
 * Destroys a frame. NULL is ignored.
 */
void gl_frame_free(struct GlFrame *frame);

/**
 * Adds a person. Either shoulder pointer may be NULL when the keypoint was
 * not detected, but not just one of them.
 */
enum GlStatus gl_frame_add_person(struct GlFrame *frame,
                                  const char *id,
                                  struct GlBox bbox,
                                  const struct GlPoint *left_shoulder,
                                  const struct GlPoint *right_shoulder,
                                  double confidence);

/**
 * Adds a face, optionally linked to a person id (NULL for none).
 */
enum GlStatus gl_frame_add_face(struct GlFrame *frame,
                                const char *id,
                                struct GlBox bbox,
                                double confidence,
                                const char *person_id);

/**
 * Assesses a frame built with the `gl_frame_*` functions.
 *
 * Coordinates outside the image are clamped first, as when reading a
 * detection file; a frame that is still malformed afterwards gives
 * `GL_STATUS_INVALID_ARGUMENT`. `summary` and `report_json` may each be
 * NULL. When given, `report_json` receives the frame report as one JSON
 * object, to be released with `gl_string_free`. The frame is not modified.
 */
enum GlStatus gl_engine_process_frame(const struct GlEngine *engine,
                                      const struct GlFrame *frame,
                                      struct GlFrameSummary *summary,
                                      char **report_json);

/**
 * Processes the text of a whole detection file and returns the report
 * file, byte for byte what the command-line `run` writes for the same
 * inputs.
 */
enum GlStatus gl_engine_process_detections(const struct GlEngine *engine,
                                           const char *detections_jsonl,
                                           char **report_jsonl);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GUARDLINE_H */
