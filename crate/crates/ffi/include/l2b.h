#ifndef L2B_H
#define L2B_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum L2bStatus {
  L2B_STATUS_OK = 0,
  L2B_STATUS_NULL_POINTER = 1,
  L2B_STATUS_INVALID_ARGUMENT = 2,
  L2B_STATUS_IO = 3,
  L2B_STATUS_PARSE = 4,
  L2B_STATUS_VERSION_MISMATCH = 5,
  L2B_STATUS_EMPTY_MODEL = 6,
  L2B_STATUS_EMPTY_INPUT = 7,
  L2B_STATUS_NO_CANDIDATES = 8,
  L2B_STATUS_DEGENERATE = 9,
  L2B_STATUS_PANIC = 10,
} L2bStatus;

typedef struct L2bConfig L2bConfig;

// A floor database with its score field.
typedef struct L2bFloor L2bFloor;

typedef struct L2bResult L2bResult;

typedef struct L2bSubmap L2bSubmap;

// One scored pose candidate. `yaw` is in radians.
typedef struct L2bCandidate {
  double x;
  double y;
  double yaw;
  uint32_t votes;
  double s_a;
  double s_p;
  double confidence;
} L2bCandidate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *l2b_last_error(void);

// Library version as a static string.
const char *l2b_version(void);

// Default pipeline parameters.
enum L2bStatus l2b_config_new(struct L2bConfig **out);

// Defaults overridden by a `key = value` file.
enum L2bStatus l2b_config_load(const char *path, struct L2bConfig **out);

// Sets one parameter by its configuration key.
enum L2bStatus l2b_config_set(struct L2bConfig *cfg, const char *key, const char *value);

void l2b_config_free(struct L2bConfig *cfg);

// Builds the database of one floor of a wall model file. `floor_id` may be
// null when the file holds a single floor.
enum L2bStatus l2b_floor_from_model(const char *model_path,
                                    const char *floor_id,
                                    const struct L2bConfig *cfg,
                                    struct L2bFloor **out);

// Loads a database written by `l2b build-db` or [`l2b_floor_save`].
enum L2bStatus l2b_floor_load(const char *db_path,
                              const struct L2bConfig *cfg,
                              struct L2bFloor **out);

enum L2bStatus l2b_floor_save(const struct L2bFloor *floor, const char *db_path);

// Number of indexed triplets.
size_t l2b_floor_triplet_count(const struct L2bFloor *floor);

void l2b_floor_free(struct L2bFloor *floor);

enum L2bStatus l2b_submap_load(const char *path, struct L2bSubmap **out);

// Wraps `n_points` interleaved `x, y, z` triples and a gravity direction.
enum L2bStatus l2b_submap_from_points(const double *xyz,
                                      size_t n_points,
                                      const double *gravity,
                                      struct L2bSubmap **out);

size_t l2b_submap_point_count(const struct L2bSubmap *submap);

void l2b_submap_free(struct L2bSubmap *submap);

// Registers the submap against `n_floors` floors and keeps the most
// confident one.
enum L2bStatus l2b_register(const struct L2bSubmap *submap,
                            const struct L2bFloor *const *floors,
                            size_t n_floors,
                            const struct L2bConfig *cfg,
                            struct L2bResult **out);

enum L2bStatus l2b_result_best(const struct L2bResult *result, struct L2bCandidate *out);

// Candidates scored on the selected floor, best first.
size_t l2b_result_candidate_count(const struct L2bResult *result);

enum L2bStatus l2b_result_candidate(const struct L2bResult *result,
                                    size_t index,
                                    struct L2bCandidate *out);

// Id of the selected floor, owned by the result.
const char *l2b_result_floor_id(const struct L2bResult *result);

void l2b_result_free(struct L2bResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L2B_H */
