#ifndef LSTMTRADE_H
#define LSTMTRADE_H

#include <stddef.h>
#include <stdint.h>

#if defined(LSTMTRADE_BUILDING_LIBRARY)
#define LT_API __attribute__((visibility("default")))
#else
#define LT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The non-zero values double as CLI exit codes. */
typedef enum {
    LT_OK = 0,
    LT_ERR_INTERNAL = 1,
    LT_ERR_CONFIG = 2,
    LT_ERR_DATA = 3,
    LT_ERR_NUMERIC = 4
} lt_status;

typedef struct lt_series lt_series;
typedef struct lt_config lt_config;

/* Progress and warning lines. `message` is only valid during the call. */
typedef void (*lt_log_fn)(const char* message, void* user);

LT_API const char* lt_version(void);

/* Message for the most recent failure on the calling thread, "" if none. */
LT_API const char* lt_last_error(void);

/* Frees strings returned through char** out-parameters. NULL is ignored. */
LT_API void lt_string_free(char* s);

/* Price series */
LT_API lt_status lt_series_load(const char* csv_path, lt_series** out);
LT_API void lt_series_free(lt_series* series);
LT_API size_t lt_series_size(const lt_series* series);
/* Copies min(size, capacity) adjusted closes; returns the number copied. */
LT_API size_t lt_series_adj_close(const lt_series* series, double* out, size_t capacity);
/* Date of row `index` as YYYY-MM-DD into a buffer of at least 11 bytes. */
LT_API lt_status lt_series_date(const lt_series* series, size_t index, char* out, size_t capacity);
LT_API lt_status lt_series_summary(const lt_series* series, char** json_out);

/* Validates `input_csv`; writes the normalized copy when `output_csv` is non-NULL. */
LT_API lt_status lt_ingest(const char* input_csv, const char* output_csv, char** summary_json_out);

/* Run configuration */
LT_API lt_status lt_config_load(const char* path, lt_config** out);
LT_API lt_status lt_config_parse(const char* json_text, lt_config** out);
LT_API void lt_config_free(lt_config* config);
LT_API void lt_config_set_seed(lt_config* config, uint64_t seed);
LT_API lt_status lt_config_set_output_dir(lt_config* config, const char* dir);
/* Applies one "a.b.c" = JSON value override and re-validates the document. */
LT_API lt_status lt_config_set(lt_config* config, const char* key_path, const char* json_value);
LT_API lt_status lt_config_fingerprint(const lt_config* config, char** out);
LT_API lt_status lt_config_output_dir(const lt_config* config, char** out);
LT_API lt_status lt_config_json(const lt_config* config, char** out);

/* Commands. Output directories default to the config's output_dir when NULL. */
LT_API lt_status lt_backtest_run(const lt_config* config, const char* out_dir, lt_log_fn log, void* user,
                                 char** report_json_out);
/* `grid_json` NULL or "" selects the default grid. */
LT_API lt_status lt_gridsearch_run(const lt_config* config, const char* grid_json, const char* out_dir, int workers,
                                   int resume, lt_log_fn log, void* user, char** best_json_out);
LT_API lt_status lt_compare(const char* const* report_paths, size_t count, char** table_out, char** json_out);
LT_API lt_status lt_plot(const char* const* equity_paths, size_t count, const char* svg_path);

#ifdef __cplusplus
}
#endif

#endif
