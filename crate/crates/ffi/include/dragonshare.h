#ifndef DRAGONSHARE_H
#define DRAGONSHARE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsScenario {
  /**
   * `r - 1` players, the dragon grabs one of `r` pieces.
   */
  DS_SCENARIO_PIECE_GRAB = 0,
  /**
   * `r + 1` players, the dragon swallows one of them.
   */
  DS_SCENARIO_PLAYER_SWALLOW = 1,
  /**
   * `n` players over `n + 1` pieces, classical balancing only.
   */
  DS_SCENARIO_KKM = 2,
} DsScenario;

/**
 * Status codes returned by every fallible function.
 */
typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_INVALID_ARGUMENT = 1,
  DS_STATUS_NULL_POINTER = 2,
  DS_STATUS_SEARCH_FAILED = 3,
  DS_STATUS_ENVY_FAILED = 4,
  DS_STATUS_CONDITION_VIOLATED = 5,
  DS_STATUS_INTERNAL = 6,
  DS_STATUS_PANIC = 7,
} DsStatus;

/**
 * A valuation profile.
 */
typedef struct DsProfile DsProfile;

/**
 * A solved instance.
 */
typedef struct DsResult DsResult;

/**
 * Solver parameters; start from [`ds_params_default`].
 */
typedef struct DsParams {
  double tol;
  uint64_t budget;
  double eps_fuzz;
  double eps_sign;
  uint64_t seed;
  double envy_tol;
} DsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The default parameters.
 */
struct DsParams ds_params_default(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *ds_last_error(void);

/**
 * Library version as a static string.
 */
const char *ds_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ds_string_free(char *s);

/**
 * Parses a profile: `{"players": [{"breakpoints": [...], "values": [...]}], "regime": "hungry"|"signed"}`.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum DsStatus ds_profile_from_json(const char *json,
                                   struct DsProfile **out);

/**
 * A seeded random profile with `pieces` density steps per player. `signed_values`
 * nonzero allows negative densities.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DsStatus ds_profile_random(uint64_t seed,
                                size_t players,
                                int signed_values,
                                size_t pieces,
                                struct DsProfile **out);

/**
 * Number of players, or 0 for a null handle.
 *
 * # Safety
 * `profile` must be null or a live handle.
 */
size_t ds_profile_player_count(const struct DsProfile *profile);

/**
 * # Safety
 * `profile` must be null or a handle not yet freed.
 */
void ds_profile_free(struct DsProfile *profile);

/**
 * Solves a scenario. `params` may be null for the defaults. Every dragon action of a
 * returned piece-grab or player-swallow result has been checked envy-free.
 *
 * # Safety
 * `profile` must be a live handle, `params` null or valid, `out` a valid pointer.
 */
enum DsStatus ds_solve(enum DsScenario scenario,
                       const struct DsProfile *profile,
                       const struct DsParams *params,
                       struct DsResult **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void ds_result_free(struct DsResult *result);

/**
 * Number of cut points, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t ds_result_cut_len(const struct DsResult *result);

/**
 * Copies the cut points into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `result` must be a live handle and `buf` valid for `len` writes.
 */
enum DsStatus ds_result_cut(const struct DsResult *result, double *buf, size_t len);

/**
 * Balance residual of the point the result was read from; NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double ds_result_residual(const struct DsResult *result);

/**
 * Smallest envy margin over all dragon actions; NaN for KKM results and null handles.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double ds_result_min_margin(const struct DsResult *result);

/**
 * Number of edges of the decision tree.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t ds_result_edge_count(const struct DsResult *result);

/**
 * Edge `index` (0-based) of the tree: endpoints `u < w` and its label, all 1-based.
 *
 * # Safety
 * `result` must be a live handle; the output pointers must be valid.
 */
enum DsStatus ds_result_edge(const struct DsResult *result,
                             size_t index,
                             size_t *u,
                             size_t *w,
                             size_t *label);

/**
 * Who receives what when the dragon takes action `dragon` (1-based). Writes the box
 * of player `j` to `boxes[j - 1]`, and 0 for a player who gets nothing; `len` must be
 * at least the number of players.
 *
 * # Safety
 * `result` must be a live handle and `boxes` valid for `len` writes.
 */
enum DsStatus ds_result_assignment(const struct DsResult *result,
                                   size_t dragon,
                                   size_t *boxes,
                                   size_t len);

/**
 * The result as pretty-printed JSON; release with [`ds_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum DsStatus ds_result_to_json(const struct DsResult *result, char **out);

/**
 * Checks the dragon marriage condition for `{"n": .., "sets": [[..], ..]}`. Returns
 * `Ok` with a tree of representatives, or `ConditionViolated` with a witness; the
 * JSON report is written to `out` in both cases.
 *
 * # Safety
 * `family_json` must be a nul-terminated string and `out` a valid pointer.
 */
enum DsStatus ds_lemma(const char *family_json, char **out);

/**
 * Re-checks a result JSON (as written by [`ds_result_to_json`] or the CLI) against a
 * profile. `min_margin` may be null.
 *
 * # Safety
 * `result_json` must be a nul-terminated string, `profile` a live handle and
 * `min_margin` null or valid.
 */
enum DsStatus ds_verify(const char *result_json,
                        const struct DsProfile *profile,
                        double tol,
                        double *min_margin);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRAGONSHARE_H */
