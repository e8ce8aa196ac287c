#ifndef PCAISING_PCAISING_H
#define PCAISING_PCAISING_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define PCAI_API __attribute__((visibility("default")))
#else
#define PCAI_API
#endif

typedef enum pcai_status {
  PCAI_OK = 0,
  PCAI_INVALID_ARGUMENT = 1,
  PCAI_UNKNOWN_EXPERIMENT = 2,
  PCAI_SIZE_GUARD = 3,
  PCAI_IO = 4,
  PCAI_INTERNAL = 5
} pcai_status;

typedef struct pcai_config pcai_config;
typedef struct pcai_table pcai_table;

/* Stable lower-case name of a status, e.g. "size_guard". */
PCAI_API const char* pcai_status_name(pcai_status status);
/* Message of the last failing call on this thread ("" if none). */
PCAI_API const char* pcai_last_error(void);
PCAI_API const char* pcai_version(void);

PCAI_API pcai_status pcai_config_create(pcai_config** out);
PCAI_API void pcai_config_destroy(pcai_config* config);
PCAI_API pcai_status pcai_config_set_experiment(pcai_config* config, const char* name);
PCAI_API pcai_status pcai_config_set_sides(pcai_config* config, const int* sides, size_t count);
/* Explicit (J, q); clears any regime. */
PCAI_API pcai_status pcai_config_set_coupling(pcai_config* config, double J, double q);
/* Regime J = k log L, q = c log L / L; clears any explicit pair. */
PCAI_API pcai_status pcai_config_set_regime(pcai_config* config, double k, double c);
PCAI_API pcai_status pcai_config_set_seed(pcai_config* config, uint64_t seed);
PCAI_API pcai_status pcai_config_set_trials(pcai_config* config, int64_t trials);
PCAI_API pcai_status pcai_config_set_budget(pcai_config* config, int64_t budget);
/* path may be NULL or "" for no file; format is "csv" or "json". */
PCAI_API pcai_status pcai_config_set_output(pcai_config* config, const char* path, const char* format);
/* Overrides fields with the keys of a JSON object (same names as the CLI flags). */
PCAI_API pcai_status pcai_config_merge_json(pcai_config* config, const char* json_text);
/* Config as a JSON object; free with pcai_string_free. */
PCAI_API pcai_status pcai_config_to_json(const pcai_config* config, char** out);
PCAI_API pcai_status pcai_config_validate(const pcai_config* config);

/* Runs the experiment (refusing bad input before computing) and writes the
   output file when one is set. */
PCAI_API pcai_status pcai_run(const pcai_config* config, pcai_table** out);
PCAI_API void pcai_table_destroy(pcai_table* table);
PCAI_API size_t pcai_table_rows(const pcai_table* table);
PCAI_API size_t pcai_table_columns(const pcai_table* table);
/* NULL when out of range. The pointer lives as long as the table. */
PCAI_API const char* pcai_table_column_name(const pcai_table* table, size_t column);
/* NaN for a null cell. */
PCAI_API pcai_status pcai_table_value(const pcai_table* table, size_t row, size_t column, double* out);
PCAI_API pcai_status pcai_table_render(const pcai_table* table, const char* format, char** out);
PCAI_API pcai_status pcai_table_write(const pcai_table* table, const char* path, const char* format);
PCAI_API void pcai_string_free(char* text);

/* Closed forms of the discrepancy walk. */
PCAI_API pcai_status pcai_hit_prob(double p_plus, double p_minus, int L, int start, double* out);
PCAI_API pcai_status pcai_expected_absorption(double p_plus, double p_minus, int L, int start, double* out);
/* Exact TV distance between the PCA stationary measure and Gibbs (L <= 4). */
PCAI_API pcai_status pcai_exact_tv(int L, double J, double q, double* out);

#ifdef __cplusplus
}
#endif

#endif
