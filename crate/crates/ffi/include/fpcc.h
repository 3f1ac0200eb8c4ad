#ifndef FPCC_H
#define FPCC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FpccStatus {
  FPCC_STATUS_OK = 0,
  FPCC_STATUS_NULL_POINTER = 1,
  FPCC_STATUS_INVALID_INPUT = 2,
  FPCC_STATUS_OUT_OF_RANGE = 3,
  FPCC_STATUS_PARSE = 4,
  FPCC_STATUS_IO = 5,
  FPCC_STATUS_BUFFER_TOO_SMALL = 6,
  FPCC_STATUS_PANIC = 7,
} FpccStatus;

/**
 * Values accepted by `fpcc_scene_generate`'s `model` argument.
 */
typedef enum FpccModel {
  FPCC_MODEL_SPHERE = 0,
  FPCC_MODEL_BOX = 1,
  FPCC_MODEL_CYLINDER = 2,
  FPCC_MODEL_L_BRACKET = 3,
} FpccModel;

typedef struct FpccEmbeddings FpccEmbeddings;

typedef struct FpccScene FpccScene;

typedef struct FpccSegmentation FpccSegmentation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *fpcc_last_error(void);

const char *fpcc_version(void);

enum FpccStatus fpcc_scene_read(const char *path, struct FpccScene **out);

enum FpccStatus fpcc_scene_write(const struct FpccScene *scene, const char *path);

/**
 * Builds a scene from `n` xyz triples. `labels` may be NULL (all
 * unlabeled); otherwise -1 marks an unlabeled point. Centers are optional
 * (`n_centers` = 0) and given as ids plus xyz triples.
 */
enum FpccStatus fpcc_scene_from_arrays(const double *xyz,
                                       const int64_t *labels,
                                       size_t n,
                                       double d_max,
                                       const uint32_t *center_ids,
                                       const double *center_xyz,
                                       size_t n_centers,
                                       struct FpccScene **out);

/**
 * Generates one scene of `model` copies in the default 10 x 10 x 4 bin.
 */
enum FpccStatus fpcc_scene_generate(uint32_t model,
                                    double scale,
                                    size_t model_samples,
                                    size_t min_instances,
                                    size_t max_instances,
                                    size_t min_points,
                                    size_t max_points,
                                    bool occlusion,
                                    uint64_t seed,
                                    struct FpccScene **out);

/**
 * Number of points, or 0 for NULL.
 */
size_t fpcc_scene_len(const struct FpccScene *scene);

/**
 * `d_max` of the scene, or NaN for NULL.
 */
double fpcc_scene_d_max(const struct FpccScene *scene);

/**
 * Copies `3·len` coordinates.
 */
enum FpccStatus fpcc_scene_positions(const struct FpccScene *scene, double *out, size_t capacity);

/**
 * Copies one label per point, -1 for unlabeled.
 */
enum FpccStatus fpcc_scene_labels(const struct FpccScene *scene, int64_t *out, size_t capacity);

void fpcc_scene_free(struct FpccScene *scene);

/**
 * Ground-truth center score of every point.
 */
enum FpccStatus fpcc_score_scene(const struct FpccScene *scene,
                                 double beta,
                                 double *out,
                                 size_t capacity);

enum FpccStatus fpcc_oracle_embed(const struct FpccScene *scene,
                                  size_t dim,
                                  double anchor_separation,
                                  double intra_noise_sigma,
                                  double score_noise_sigma,
                                  uint64_t seed,
                                  struct FpccEmbeddings **out);

/**
 * Wraps `n·dim` row-major values. `scores` may be NULL.
 */
enum FpccStatus fpcc_embeddings_from_arrays(const double *values,
                                            size_t n,
                                            size_t dim,
                                            const double *scores,
                                            struct FpccEmbeddings **out);

enum FpccStatus fpcc_embeddings_read(const char *path, struct FpccEmbeddings **out);

enum FpccStatus fpcc_embeddings_write(const struct FpccEmbeddings *emb, const char *path);

size_t fpcc_embeddings_len(const struct FpccEmbeddings *emb);

size_t fpcc_embeddings_dim(const struct FpccEmbeddings *emb);

/**
 * Copies the predicted center scores; fails if the embeddings carry none.
 */
enum FpccStatus fpcc_embeddings_scores(const struct FpccEmbeddings *emb,
                                       double *out,
                                       size_t capacity);

void fpcc_embeddings_free(struct FpccEmbeddings *emb);

/**
 * Center selection at threshold `theta` followed by point assignment.
 */
enum FpccStatus fpcc_segment(const struct FpccScene *scene,
                             const struct FpccEmbeddings *emb,
                             double theta,
                             struct FpccSegmentation **out);

enum FpccStatus fpcc_segmentation_read(const char *path, struct FpccSegmentation **out);

enum FpccStatus fpcc_segmentation_write(const struct FpccSegmentation *seg, const char *path);

size_t fpcc_segmentation_len(const struct FpccSegmentation *seg);

size_t fpcc_segmentation_num_instances(const struct FpccSegmentation *seg);

/**
 * Copies one instance index per point, -1 for noise.
 */
enum FpccStatus fpcc_segmentation_assignments(const struct FpccSegmentation *seg,
                                              int64_t *out,
                                              size_t capacity);

/**
 * Copies the point index of each instance's center.
 */
enum FpccStatus fpcc_segmentation_centers(const struct FpccSegmentation *seg,
                                          size_t *out,
                                          size_t capacity);

enum FpccStatus fpcc_segmentation_confidences(const struct FpccSegmentation *seg,
                                              double *out,
                                              size_t capacity);

void fpcc_segmentation_free(struct FpccSegmentation *seg);

/**
 * `1 − (distance / d_max)^β`; fails with `FPCC_STATUS_OUT_OF_RANGE` when
 * `distance` exceeds `d_max`.
 */
enum FpccStatus fpcc_center_score(double distance, double d_max, double beta, double *out);

double fpcc_smooth_l1(double x);

/**
 * Pooled AP over `count` scene/segmentation pairs.
 */
enum FpccStatus fpcc_average_precision(const struct FpccScene *const *scenes,
                                       const struct FpccSegmentation *const *segs,
                                       size_t count,
                                       double iou_threshold,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPCC_H */
