#ifndef ICR_H
#define ICR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IcrStatus {
  ICR_STATUS_OK = 0,
  ICR_STATUS_NULL_POINTER = 1,
  ICR_STATUS_INVALID_ARGUMENT = 2,
  ICR_STATUS_DIMENSION_MISMATCH = 3,
  ICR_STATUS_NUMERICAL_FAILURE = 4,
  ICR_STATUS_MAP_FORMAT = 5,
  ICR_STATUS_CONFIG = 6,
  ICR_STATUS_IO = 7,
  ICR_STATUS_PANIC = 8,
} IcrStatus;

/**
 * Gaussian map belief.
 */
typedef struct IcrBelief IcrBelief;

/**
 * Completed exploration episode.
 */
typedef struct IcrEpisode IcrEpisode;

/**
 * Occupancy grid.
 */
typedef struct IcrMap IcrMap;

/**
 * Cone field-of-view parameters.
 */
typedef struct IcrFovParams {
  double height;
  double half_angle;
  double sigma;
  double kappa;
} IcrFovParams;

/**
 * One executed step of an episode.
 */
typedef struct IcrStepRecord {
  size_t step;
  double x;
  double y;
  double theta;
  double reward;
  bool replanned;
} IcrStepRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *icr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *icr_version(void);

/**
 * Default field of view: height 3, half-angle pi/6, sigma 1, kappa 0.5.
 */
struct IcrFovParams icr_fov_default(void);

/**
 * `exp(tau u^)` for a twist `u = [vx, vy, vz, wx, wy, wz]`.
 *
 * # Safety
 * `u` must point to 6 doubles and `out` to 16 writable doubles.
 */
enum IcrStatus icr_exp_se3(double tau, const double *u, double *out);

/**
 * Derivative of `exp(tau u^)` with respect to twist component `index`.
 *
 * # Safety
 * `u` must point to 6 doubles and `out` to 16 writable doubles.
 */
enum IcrStatus icr_dexp(double tau, const double *u, size_t index, double *out);

/**
 * Signed distance from the body-frame point `(qx, qy)` to the projected
 * cone, negative inside, and its gradient.
 *
 * # Safety
 * `fov` must be valid; `distance` and `grad` (2 doubles) must be writable.
 */
enum IcrStatus icr_sdf(const struct IcrFovParams *fov,
                       double qx,
                       double qy,
                       double *distance,
                       double *grad);

/**
 * Loads a P2 graymap as an occupancy grid.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum IcrStatus icr_map_load_pgm(const char *path,
                                double resolution,
                                double origin_x,
                                double origin_y,
                                struct IcrMap **out);

/**
 * Built-in room layout with `width` columns and `height` rows.
 *
 * # Safety
 * `out` must be writable.
 */
enum IcrStatus icr_map_synthetic_room(size_t width,
                                      size_t height,
                                      double resolution,
                                      struct IcrMap **out);

/**
 * Number of cells, or 0 for a null handle.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t icr_map_cell_count(const struct IcrMap *map);

/**
 * # Safety
 * `map` must be null or a handle not yet freed.
 */
void icr_map_free(struct IcrMap *map);

/**
 * Zero-mean belief with covariance `variance * I` in diagonal storage.
 *
 * # Safety
 * `out` must be writable.
 */
enum IcrStatus icr_belief_new(size_t cells, double variance, struct IcrBelief **out);

/**
 * `log det` of the belief information.
 *
 * # Safety
 * `belief` must be a live handle and `out` writable.
 */
enum IcrStatus icr_belief_log_det(const struct IcrBelief *belief, double *out);

/**
 * # Safety
 * `belief` must be null or a handle not yet freed.
 */
void icr_belief_free(struct IcrBelief *belief);

/**
 * Optimizes `horizon` planar controls in place, starting from the pose
 * `(x, y, theta)`, against the belief's information over the map cells.
 * `controls` holds `horizon * 6` doubles, one twist per row. The final
 * reward is written to `reward`.
 *
 * # Safety
 * All pointers must be valid; `controls` must hold `horizon * 6` doubles.
 */
enum IcrStatus icr_plan(const struct IcrMap *map,
                        const struct IcrBelief *belief,
                        const struct IcrFovParams *fov,
                        double x,
                        double y,
                        double theta,
                        double tau,
                        size_t horizon,
                        size_t iterations,
                        double *controls,
                        double *reward);

/**
 * Runs one episode on `map`. `config_json` uses the same schema as the
 * command-line configuration (NULL for defaults); `strategy` is one of
 * `icr`, `icr_frontier`, `frontier`, `random`.
 *
 * # Safety
 * `map` must be live, strings NUL-terminated or null, `out` writable.
 */
enum IcrStatus icr_episode_run(const struct IcrMap *map,
                               const char *config_json,
                               const char *strategy,
                               uint64_t seed,
                               struct IcrEpisode **out);

/**
 * Number of executed steps, or 0 for a null handle.
 *
 * # Safety
 * `episode` must be null or a live handle.
 */
size_t icr_episode_len(const struct IcrEpisode *episode);

/**
 * Copies record `index` into `out`.
 *
 * # Safety
 * `episode` must be live and `out` writable.
 */
enum IcrStatus icr_episode_record(const struct IcrEpisode *episode,
                                  size_t index,
                                  struct IcrStepRecord *out);

/**
 * # Safety
 * `episode` must be null or a handle not yet freed.
 */
void icr_episode_free(struct IcrEpisode *episode);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ICR_H */
