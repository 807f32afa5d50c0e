#ifndef IET_LAB_H
#define IET_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IetLabStatus {
  IET_LAB_STATUS_OK = 0,
  IET_LAB_STATUS_NULL_POINTER = 1,
  IET_LAB_STATUS_INVALID_UTF8 = 2,
  IET_LAB_STATUS_PARSE = 3,
  IET_LAB_STATUS_INVALID_INPUT = 4,
  IET_LAB_STATUS_COMPUTATION = 5,
  IET_LAB_STATUS_PANIC = 6,
} IetLabStatus;

/**
 * Opaque interval exchange.
 */
typedef struct IetLabIet IetLabIet;

/**
 * Opaque mean-zero step function.
 */
typedef struct IetLabStep IetLabStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * is valid until the next call into the library on the same thread.
 */
const char *iet_lab_last_error(void);

/**
 * Static, NUL-terminated version string.
 */
const char *iet_lab_version(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void iet_lab_string_free(char *s);

/**
 * Builds an exchange from `{"permutation":[...],"lengths":[...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum IetLabStatus iet_lab_iet_from_json(const char *json, struct IetLabIet **out);

/**
 * Catalog exchange by name: `golden`, `third`, `three` or `four`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` writable.
 */
enum IetLabStatus iet_lab_iet_preset(const char *name, struct IetLabIet **out);

/**
 * # Safety
 * `iet` must come from this library and not have been freed.
 */
void iet_lab_iet_free(struct IetLabIet *iet);

/**
 * Number of exchanged intervals, or 0 for a null handle.
 *
 * # Safety
 * `iet` must be NULL or a live handle.
 */
size_t iet_lab_iet_interval_count(const struct IetLabIet *iet);

/**
 * # Safety
 * `iet` must be a live handle and `out` writable.
 */
enum IetLabStatus iet_lab_iet_to_json(const struct IetLabIet *iet, char **out);

/**
 * `T x` as an exact string.
 *
 * # Safety
 * `iet` must be a live handle, `x` a NUL-terminated string and `out` writable.
 */
enum IetLabStatus iet_lab_iet_apply(const struct IetLabIet *iet, const char *x, char **out);

/**
 * Checks the infinite distinct orbits condition up to `depth`. Writes 0
 * to `fails_at` when no connection was found, otherwise the first `n`
 * with `T^n β_i = β_j`.
 *
 * # Safety
 * `iet` must be a live handle and `fails_at` writable.
 */
enum IetLabStatus iet_lab_iet_check_idoc(const struct IetLabIet *iet,
                                         uint64_t depth,
                                         uint64_t *fails_at);

/**
 * Builds a step function from `{"widths":[...],"values":[...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum IetLabStatus iet_lab_step_from_json(const char *json, struct IetLabStep **out);

/**
 * # Safety
 * `step` must come from this library and not have been freed.
 */
void iet_lab_step_free(struct IetLabStep *step);

/**
 * # Safety
 * `step` must be a live handle and `out` writable.
 */
enum IetLabStatus iet_lab_step_to_json(const struct IetLabStep *step, char **out);

/**
 * Moves discontinuity `i` (one-based) by `zeta` and restores mean zero.
 * The result is a new handle.
 *
 * # Safety
 * `step` must be a live handle, `zeta` a NUL-terminated string and `out` writable.
 */
enum IetLabStatus iet_lab_step_nudge(const struct IetLabStep *step,
                                     size_t i,
                                     const char *zeta,
                                     struct IetLabStep **out);

/**
 * `S_n f(x) = f(x) + … + f(T^{n−1} x)` as an exact string.
 *
 * # Safety
 * Handles must be live, `x` a NUL-terminated string and `out` writable.
 */
enum IetLabStatus iet_lab_birkhoff_sum(const struct IetLabIet *iet,
                                       const struct IetLabStep *step,
                                       const char *x,
                                       size_t n,
                                       char **out);

/**
 * Number of `0 ≤ m < n` with `t + S_m f(x) ∈ [−B, B]`.
 *
 * # Safety
 * Handles must be live, the strings NUL-terminated and `out` writable.
 */
enum IetLabStatus iet_lab_visit_count(const struct IetLabIet *iet,
                                      const struct IetLabStep *step,
                                      const char *x,
                                      const char *t,
                                      const char *b,
                                      uint64_t n,
                                      uint64_t *out);

/**
 * Runs every experiment of a TOML campaign config and writes the full
 * report as JSON. `passed` receives 1 when every check passed, else 0.
 * Nothing is written to disk.
 *
 * # Safety
 * `config` must be a NUL-terminated string; `out` and `passed` writable.
 */
enum IetLabStatus iet_lab_run_campaign(const char *config, char **out, int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IET_LAB_H */
