/* C interface to the simplex forecast-combination library.
 *
 * Every function returns an sc_status; SC_OK means success. On any
 * failure the thread-local message from sc_last_error() describes what
 * went wrong. Pointer arguments must be non-null unless noted, and
 * output buffers must be sized as documented per call.
 *
 * Compositions are passed as plain double arrays; matrices are
 * row-major. Strings returned through char** are heap-allocated and
 * must be released with sc_string_free().
 */
#ifndef SIMPLEX_COMBINE_H
#define SIMPLEX_COMBINE_H

#include <stddef.h>

#if defined(_WIN32)
#define SC_API __declspec(dllexport)
#else
#define SC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sc_status {
    SC_OK = 0,
    SC_INVALID_ARGUMENT = 1,
    SC_DIMENSION_MISMATCH = 2,
    SC_NON_POSITIVE_ENTRY = 3,
    SC_NOT_ZERO_SUM = 4,
    SC_INSUFFICIENT_ROWS = 5,
    SC_ZERO_VARIATION = 6,
    SC_INVALID_K = 7,
    SC_ZERO_MSFE = 8,
    SC_ZERO_MEAN = 9,
    SC_IO_ERROR = 10,
    SC_SCHEMA_ERROR = 11,
    SC_PARSE_ERROR = 12,
    SC_EMPTY_PANEL = 13,
    SC_MISSING_RUN = 14,
    SC_CONFIG_ERROR = 15,
    SC_INTERNAL_ERROR = 16
} sc_status;

SC_API const char* sc_status_name(sc_status status);

/* Message for the most recent failure on the calling thread. Valid
 * until the next failing call on the same thread. Never null. */
SC_API const char* sc_last_error(void);

SC_API const char* sc_version(void);

SC_API void sc_string_free(char* s);

/* ---- simplex operations ------------------------------------------- */

/* Rescale n positive parts to sum 1. out may alias in. n >= 2. */
SC_API sc_status sc_closure(const double* in, size_t n, double* out);

/* Centered log-ratio transform of a composition and its inverse.
 * sc_clr_inv rejects inputs whose coordinates do not sum to zero. */
SC_API sc_status sc_clr(const double* in, size_t n, double* out);
SC_API sc_status sc_clr_inv(const double* in, size_t n, double* out);

/* Compositional center of t rows of j parts (row-major). out: j. */
SC_API sc_status sc_center(const double* rows, size_t t, size_t j, double* out);

/* Variation matrix of t rows of j parts: out_matrix (j*j, row-major)
 * holds the sample variances of log(x_i/x_j); out_total gets the sum
 * over i<j. Either output may be null to skip it. t >= 2. */
SC_API sc_status sc_variation(const double* rows, size_t t, size_t j, double* out_matrix,
                              double* out_total);

/* Center the rows at the uniform composition and scale total variation
 * to one. out_rows: t*j, may alias rows. */
SC_API sc_status sc_center_and_scale(const double* rows, size_t t, size_t j,
                                     double* out_rows);

/* ---- selection ----------------------------------------------------- */

/* Keep parts of the center weight vector g (length j) strictly above
 * 1/j, falling back to all parts when none qualifies. out_included:
 * j flags (1 = kept); out_weights: j, reclosed weights for kept parts
 * and 0 elsewhere; out_count: number kept. */
SC_API sc_status sc_cas_threshold(const double* g, size_t j, int* out_included,
                                  double* out_weights, size_t* out_count);

/* Cluster the columns of a t*j matrix of weight compositions by their
 * log-ratio distances and allocate 1/k per cluster, split inside each
 * cluster by the within-cluster center. ward nonzero selects Ward
 * linkage, zero complete linkage. out_assignment: j cluster ids
 * (0..k-1); out_weights: j. */
SC_API sc_status sc_cluster_weights(const double* rows, size_t t, size_t j, int ward,
                                    size_t k, int* out_assignment, double* out_weights);

/* Rank-2 factorization of the centered log-ratio matrix. covariance
 * nonzero puts the singular values on the loadings instead of the
 * scores. out_scores: t*2, out_loadings: j*2, out_singular: 2,
 * out_variance_explained: 1; any output may be null. */
SC_API sc_status sc_biplot(const double* rows, size_t t, size_t j, int covariance,
                           double* out_scores, double* out_loadings, double* out_singular,
                           double* out_variance_explained);

/* ---- evaluation ----------------------------------------------------- */

/* Mean error, root mean squared error and the absolute percentage
 * metrics for n forecast/actual pairs. When any actual is zero the
 * percentage metrics are undefined: *out_has_ape is set to 0 and the
 * ape outputs are left untouched. out_mape/out_mdape may be null. */
SC_API sc_status sc_accuracy_metrics(const double* forecasts, const double* actuals,
                                     size_t n, double* out_me, double* out_rmse,
                                     double* out_mape, double* out_mdape,
                                     int* out_has_ape);

/* Mean squared forecast error split into bias, variance and covariance
 * proportions. out: {msfe, bias_prop, var_prop, cov_prop}. Fails with
 * SC_ZERO_MSFE on a perfect forecast series. n >= 2. */
SC_API sc_status sc_msfe_decomposition(const double* forecasts, const double* actuals,
                                       size_t n, double* out);

/* Case id 1..4 from the bias and variance proportions: 1 = both low,
 * 2 = high variance only, 3 = both high, 4 = high bias only. A
 * proportion is high when it reaches its cut. */
SC_API sc_status sc_classify_case(double bias_prop, double var_prop, double bias_cut,
                                  double var_cut, int* out_case);

/* Sample coefficient of variation of one cross section (n >= 2).
 * Fails with SC_ZERO_MEAN when the mean is exactly zero. */
SC_API sc_status sc_coefficient_of_variation(const double* values, size_t n, double* out);

/* ---- pipeline ------------------------------------------------------- */

typedef struct sc_config sc_config;

/* Parse a run configuration. Relative paths inside the file resolve
 * against the file's directory (sc_config_load) or base_dir, which may
 * be null for the current directory (sc_config_parse). */
SC_API sc_status sc_config_load(const char* path, sc_config** out);
SC_API sc_status sc_config_parse(const char* json_text, const char* base_dir,
                                 sc_config** out);

/* Replace one setting. Keys: out_dir, epsilon, jobs, methods (comma
 * separated), cas.mode, cas.linkage, cas.k, train_end_year. */
SC_API sc_status sc_config_override(sc_config* config, const char* key, const char* value);

/* Read one effective setting back as a string; keys as for
 * sc_config_override. */
SC_API sc_status sc_config_get(const sc_config* config, const char* key, char** out_value);

SC_API void sc_config_free(sc_config* config);

/* Load the survey, fill and filter it, and write one panel JSON per
 * (variable, sample, season) plus an index under <out_dir>/panels.
 * Optional outputs receive the record count after filling and the
 * number of panel files written. */
SC_API sc_status sc_ingest(const sc_config* config, size_t* out_records,
                           size_t* out_panels_written);

/* Evaluate every ingested panel: rolling combinations, weight
 * histories, selections and structure exports per panel, aggregate
 * metric/decomposition/dispersion/win tables under <out_dir>. A panel
 * failure is recorded in the run summary and does not abort the run;
 * the call itself fails only when nothing could be attempted. Optional
 * outputs receive the attempted and failed panel counts. */
SC_API sc_status sc_run(const sc_config* config, size_t* out_panels, size_t* out_failed);

/* Render <run_dir>/report.md from a finished run's aggregate tables.
 * out_report_path (optional) receives the path written. */
SC_API sc_status sc_report(const char* run_dir, char** out_report_path);

/* Factorize one ingested panel JSON into plot-ready biplot files
 * (CSV plus JSON next to it). */
SC_API sc_status sc_panel_biplot(const char* panel_json_path, const char* out_path,
                                 int covariance_scaling, double epsilon,
                                 char** out_path_written);

/* Cluster one ingested panel JSON; writes dendrogram JSON plus
 * plot-ready CSVs next to it. linkage: "ward" or "complete". */
SC_API sc_status sc_panel_cluster(const char* panel_json_path, const char* out_path,
                                  const char* linkage, size_t k, double epsilon,
                                  char** out_path_written);

#ifdef __cplusplus
}
#endif

#endif /* SIMPLEX_COMBINE_H */
