/* quafl: asynchronous federated averaging simulator with quantized
 * communication.  C interface; every object is an opaque handle and every
 * fallible call returns a quafl_status.  Strings returned through char** are
 * owned by the caller and released with quafl_string_free. */
#ifndef QUAFL_H
#define QUAFL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum quafl_status {
  QUAFL_OK = 0,
  QUAFL_ERR_INVALID_ARGUMENT = 1,
  QUAFL_ERR_PARSE = 2,
  QUAFL_ERR_DECODE_FAILURE = 3,
  QUAFL_ERR_IO = 4,
  QUAFL_ERR_INTERNAL = 5
} quafl_status;

typedef struct quafl_config quafl_config;
typedef struct quafl_trace quafl_trace;

/* Library version, e.g. "0.1.0".  Static storage; do not free. */
const char* quafl_version(void);

/* Message for the most recent failure on this thread.  Static storage,
 * overwritten by the next failing call; do not free. */
const char* quafl_last_error(void);

/* --- configuration ------------------------------------------------------ */

/* Fresh config with every field at its default.  NULL on allocation
 * failure.  Release with quafl_config_free. */
quafl_config* quafl_config_default(void);

/* Parse a JSON object into a new config.  Unknown keys are errors. */
quafl_status quafl_config_from_json(const char* json, quafl_config** out);

/* Set one field by name.  The value is parsed as JSON when possible, so
 * "8", "true", "[1,2,3]" and plain strings like "quafl" all work. */
quafl_status quafl_config_set(quafl_config* cfg, const char* key, const char* value);

/* Canonical JSON for the config (defaults filled in). */
quafl_status quafl_config_to_json(const quafl_config* cfg, char** out);

/* Range and consistency checks; QUAFL_OK when the config is runnable. */
quafl_status quafl_config_validate(const quafl_config* cfg);

void quafl_config_free(quafl_config* cfg);

/* --- presets ------------------------------------------------------------ */

/* Named experiment grid: an array of configs, released as a unit with
 * quafl_config_list_free. */
quafl_status quafl_preset(const char* name, quafl_config*** out_configs, size_t* out_count);

void quafl_config_list_free(quafl_config** configs, size_t count);

/* JSON array of {"name": ..., "description": ...} for every preset. */
quafl_status quafl_preset_names(char** out_json);

/* --- simulation --------------------------------------------------------- */

/* Run one seed of the configured experiment.  The config's own seed list is
 * ignored here; the caller drives it. */
quafl_status quafl_run(const quafl_config* cfg, uint64_t seed, quafl_trace** out);

/* Number of trace records (rounds plus the initial state). */
size_t quafl_trace_rows(const quafl_trace* trace);

/* Identifier naming this run; owned by the trace.  NULL for a NULL trace. */
const char* quafl_trace_run_id(const quafl_trace* trace);

/* Full per-round trace as CSV (header plus one line per record). */
quafl_status quafl_trace_csv(const quafl_trace* trace, char** out);

/* Aggregate metrics for the trace as a JSON object. */
quafl_status quafl_trace_summary_json(const quafl_trace* trace, char** out);

void quafl_trace_free(quafl_trace* trace);

/* --- tasks --------------------------------------------------------------- */

/* The config's task data (centers or samples) as CSV, for inspection or
 * reuse. */
quafl_status quafl_task_csv(const quafl_config* cfg, char** out);

/* --- memory -------------------------------------------------------------- */

void quafl_string_free(char* str);

#ifdef __cplusplus
}
#endif

#endif /* QUAFL_H */
