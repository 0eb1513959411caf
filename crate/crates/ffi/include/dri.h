#ifndef DRI_H
#define DRI_H

/* Generated by cbindgen. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum DriStatus {
  DRI_STATUS_OK = 0,
  DRI_STATUS_NULL_POINTER = 1,
  DRI_STATUS_INVALID_UTF8 = 2,
  DRI_STATUS_PARSE = 3,
  DRI_STATUS_INVALID_INSTANCE = 4,
  DRI_STATUS_INVALID_CONFIG = 5,
  DRI_STATUS_BUDGET_EXHAUSTED = 6,
  DRI_STATUS_SOLVER = 7,
  DRI_STATUS_IO = 8,
  DRI_STATUS_PANIC = 9,
} DriStatus;

/**
 * A parsed VRPTW instance.
 */
typedef struct DriInstance DriInstance;

/**
 * A solved route plan together with its run report.
 */
typedef struct DriSolution DriSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses an instance in the benchmark text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DriStatus dri_instance_parse(const char *text, struct DriInstance **out);

/**
 * Reads and parses an instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DriStatus dri_instance_load(const char *path, struct DriInstance **out);

/**
 * # Safety
 * `instance` must come from `dri_instance_parse` or `dri_instance_load`, or be null.
 */
void dri_instance_free(struct DriInstance *instance);

/**
 * Number of customers, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
size_t dri_instance_customer_count(const struct DriInstance *instance);

/**
 * Runs the full pipeline. `config_json` may be null for the defaults;
 * otherwise it is a JSON object with any subset of the run settings.
 *
 * # Safety
 * `instance` must be a live handle, `config_json` null or NUL-terminated,
 * and `out` a valid pointer.
 */
enum DriStatus dri_run(const struct DriInstance *instance,
                       const char *config_json,
                       struct DriSolution **out);

/**
 * Total travel cost, or NaN for a null handle.
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
double dri_solution_total_cost(const struct DriSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle or null.
 */
size_t dri_solution_route_count(const struct DriSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle or null.
 */
bool dri_solution_is_feasible(const struct DriSolution *solution);

/**
 * Solution document as JSON; free the string with `dri_string_free`.
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum DriStatus dri_solution_to_json(const struct DriSolution *solution, char **out);

/**
 * Run report as JSON; free the string with `dri_string_free`.
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum DriStatus dri_solution_report_json(const struct DriSolution *solution, char **out);

/**
 * # Safety
 * `solution` must come from `dri_run`, or be null.
 */
void dri_solution_free(struct DriSolution *solution);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void dri_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *dri_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dri_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRI_H */
