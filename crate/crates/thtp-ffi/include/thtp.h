#ifndef THTP_H
#define THTP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define THTP_OK 0

#define THTP_ERR_NULL_ARG 1

#define THTP_ERR_UTF8 2

#define THTP_ERR_CONFIG 3

#define THTP_ERR_RUN 4

#define THTP_ERR_IO 5

/**
 * Opaque simulation configuration.
 */
typedef struct ThtpConfig ThtpConfig;

/**
 * Opaque finished run: summary numbers plus the sampled time series.
 */
typedef struct ThtpRun ThtpRun;

/**
 * Summary of one finished run.
 */
typedef struct ThtpSummary {
  uint64_t localizations;
  double localized_fraction;
  uint64_t msgs_spread;
  uint64_t msgs_agent;
  uint64_t msgs_routing;
  double msgs_per_node;
  double giant_component_fraction;
  uint64_t sample_count;
} ThtpSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or NULL. Valid until the next failing
 * call on the same thread; do not free.
 */
const char *thtp_last_error(void);

/**
 * New config with the default parameters. Free with `thtp_config_free`.
 */
struct ThtpConfig *thtp_config_new(void);

/**
 * # Safety
 * `cfg` must come from `thtp_config_new`/`thtp_config_parse_file` and not
 * have been freed.
 */
void thtp_config_free(struct ThtpConfig *cfg);

/**
 * Parses a flat key = value config file. On success writes the new handle
 * into `out`. Free with `thtp_config_free`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
int32_t thtp_config_parse_file(const char *path, struct ThtpConfig **out);

/**
 * Sets one config key (same keys as the config file format).
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
int32_t thtp_config_set(struct ThtpConfig *cfg, const char *key, const char *value);

/**
 * Validates the config without running it.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
int32_t thtp_config_validate(const struct ThtpConfig *cfg);

/**
 * Runs one experiment with the given seed. On success writes the run handle
 * into `out`; free it with `thtp_run_free`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
int32_t thtp_run_experiment(const struct ThtpConfig *cfg, uint64_t seed, struct ThtpRun **out);

/**
 * # Safety
 * `run` must come from `thtp_run_experiment` and not have been freed.
 */
void thtp_run_free(struct ThtpRun *run);

/**
 * Copies the run summary into `out`.
 *
 * # Safety
 * `run` must be a live handle; `out` a valid pointer.
 */
int32_t thtp_run_summary(const struct ThtpRun *run, struct ThtpSummary *out);

/**
 * Writes the run's time series as CSV to `path`.
 *
 * # Safety
 * `run` must be a live handle; `path` a NUL-terminated string.
 */
int32_t thtp_run_write_csv(const struct ThtpRun *run, const char *path);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* THTP_H */
