#ifndef RGSPEC_H
#define RGSPEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum RgStatus {
  RG_STATUS_OK = 0,
  /**
   * The call worked and the check it ran failed; a report is still returned.
   */
  RG_STATUS_CHECK_FAILED = 1,
  RG_STATUS_PARSE_ERROR = 2,
  RG_STATUS_INVALID_ARGUMENT = 3,
  /**
   * An enumeration or exploration bound was reached before a verdict.
   */
  RG_STATUS_CAP_EXCEEDED = 4,
  RG_STATUS_INTERNAL = 5,
} RgStatus;

/**
 * A finished check: verdict plus its JSON report.
 */
typedef struct RgReport RgReport;

/**
 * A parsed, validated system specification.
 */
typedef struct RgSystem RgSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rg_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Never null.
 */
const char *rg_last_error(void);

/**
 * Parses and validates a `.rg` specification.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RgStatus rg_system_parse(const char *source, struct RgSystem **out);

/**
 * Frees a system. Null is ignored.
 *
 * # Safety
 * `sys` must be null or a handle from `rg_system_parse` not yet freed.
 */
void rg_system_free(struct RgSystem *sys);

/**
 * Number of processes in the system, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t rg_system_process_count(const struct RgSystem *sys);

/**
 * Overrides every injector budget.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
enum RgStatus rg_system_set_budget(struct RgSystem *sys, uint32_t budget);

/**
 * Overrides the atomicity: 0 for statement, 1 for block.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
enum RgStatus rg_system_set_atomicity(struct RgSystem *sys, int32_t block);

/**
 * Explores every interleaving up to `depth` steps from each initial state
 * satisfying `filter` (null for all).
 *
 * # Safety
 * `sys` must be a live handle, `filter` null or a NUL-terminated string,
 * and `out` writable.
 */
enum RgStatus rg_verify_exhaustive(const struct RgSystem *sys,
                                   const char *filter,
                                   size_t depth,
                                   struct RgReport **out);

/**
 * Runs `runs` seeded random schedules per initial state.
 *
 * # Safety
 * As for `rg_verify_exhaustive`.
 */
enum RgStatus rg_verify_random(const struct RgSystem *sys,
                               const char *filter,
                               size_t runs,
                               uint64_t seed,
                               double weight,
                               size_t step_cap,
                               struct RgReport **out);

/**
 * Checks that each layer's rely is implied by its environment's guarantees.
 *
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
enum RgStatus rg_check_complementarity(const struct RgSystem *sys, struct RgReport **out);

/**
 * Checks that each process's relies weaken from one layer to the next.
 *
 * # Safety
 * `sys` must be a live handle and `out` writable.
 */
enum RgStatus rg_check_layers(const struct RgSystem *sys, struct RgReport **out);

/**
 * 1 when the check passed, 0 when it failed or the handle is null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
int32_t rg_report_passed(const struct RgReport *report);

/**
 * JSON text of the report, owned by the report. Null for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
const char *rg_report_json(const struct RgReport *report);

/**
 * Frees a report. Null is ignored.
 *
 * # Safety
 * `report` must be null or a live handle not yet freed.
 */
void rg_report_free(struct RgReport *report);

/**
 * Validates a `.pf` diagram and renders it as DOT. The string is freed
 * with `rg_string_free`.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` writable.
 */
enum RgStatus rg_diagram_to_dot(const char *source, char **out);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from `rg_diagram_to_dot` not yet freed.
 */
void rg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RGSPEC_H */
