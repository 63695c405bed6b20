/* C API for the epf forecasting core.
 *
 * Every function returns EPF_OK (0) on success or a nonzero status; the
 * message for the most recent failure on the calling thread is available
 * through epf_last_error(). Objects are opaque handles created and
 * released by the matching *_free function. Strings returned through
 * char** outputs are released with epf_free_string().
 */
#ifndef EPF_C_H
#define EPF_C_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum epf_status {
  EPF_OK = 0,
  EPF_ERR_INVALID_ARGUMENT = 1,
  EPF_ERR_IO = 2,
  EPF_ERR_PARSE = 3,
  EPF_ERR_NUMERIC = 4,
  EPF_ERR_INTERNAL = 5
} epf_status;

typedef struct epf_dataset epf_dataset;
typedef struct epf_forecast epf_forecast;

const char* epf_version(void);
/* message of the last error on this thread; empty string if none */
const char* epf_last_error(void);
void epf_free_string(char* s);

/* ------------------------------------------------------------------ */
/* datasets                                                            */

int epf_dataset_from_manifest(const char* manifest_path, epf_dataset** out);
int epf_dataset_synthetic(const char* config_json, epf_dataset** out);
int epf_dataset_series_count(const epf_dataset* d, size_t* out);
/* first/last are 11-byte buffers receiving ISO dates */
int epf_dataset_span(const epf_dataset* d, char* first, char* last);
int epf_dataset_export_csv(const epf_dataset* d, const char* dir);
void epf_dataset_free(epf_dataset* d);

/* ------------------------------------------------------------------ */
/* forecast sets (day,hour,value,label CSV schema)                     */

int epf_forecast_read_csv(const char* path, epf_forecast** out);
int epf_forecast_write_csv(const epf_forecast* f, const char* path);
int epf_forecast_day_count(const epf_forecast* f, size_t* out);
/* buf must hold day_count * 24 doubles, day-major */
int epf_forecast_values(const epf_forecast* f, double* buf, size_t capacity);
const char* epf_forecast_label(const epf_forecast* f);
void epf_forecast_free(epf_forecast* f);

/* ------------------------------------------------------------------ */
/* models and evaluation                                               */

/* backtest_json: {"model","cw_days","rf","covariates":{...},
 *                 "test_range":{...},"seed",...}; see README */
int epf_backtest_run(const epf_dataset* d, const char* backtest_json,
                     epf_forecast** out);
int epf_naive_forecast(const epf_dataset* d, const char* zone,
                       const char* first_day, const char* last_day,
                       epf_forecast** out);
int epf_actual_prices(const epf_dataset* d, const char* zone,
                      const char* first_day, const char* last_day,
                      epf_forecast** out);
int epf_ensemble(const epf_forecast* const* members, size_t n, int strict,
                 epf_forecast** out);

/* slice: "all" | "bottom5" | "top5"; the slice is cut on the actuals */
int epf_evaluate_json(const epf_forecast* forecast, const epf_forecast* actual,
                      const epf_forecast* naive, const char* slice,
                      char** report_json);
int epf_gw_matrix_json(const epf_forecast* const* forecasts, size_t n,
                       const epf_forecast* actual, char** matrix_json,
                       char** table_text);

/* ANC over saved LEAR fit documents; the run config supplies the data */
int epf_anc_json(const char* const* fit_paths, size_t n,
                 const char* run_config_path, char** report_json);

/* ------------------------------------------------------------------ */
/* whole-pipeline commands                                             */

int epf_synth_to_dir(const char* synth_config_path, const char* out_dir);
/* out_dir/seed override the config when non-null / non-negative */
int epf_run(const char* run_config_path, const char* out_dir,
            long long seed_override);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EPF_C_H */
