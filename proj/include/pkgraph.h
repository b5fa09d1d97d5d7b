/* C API for the PKG readmission toolkit.
 *
 * Conventions:
 *   - every function returns a pkg_status; PKG_OK is 0
 *   - on failure, pkg_last_error() holds a thread-local message valid until
 *     the next call on that thread
 *   - char** outputs are malloc'd; release them with pkg_string_free
 *   - handles are opaque; release them with the matching *_free
 *   - structured payloads (configs, masks, metrics, results) cross the
 *     boundary as JSON strings
 */

#ifndef PKGRAPH_H
#define PKGRAPH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pkg_status {
  PKG_OK = 0,
  PKG_ERR_IO = 1,
  PKG_ERR_PARSE = 2,
  PKG_ERR_DUPLICATE_ADMISSION = 3,
  PKG_ERR_INVALID_WINDOW = 4,
  PKG_ERR_SAMPLE_TOO_LARGE = 5,
  PKG_ERR_UNSUPPORTED_VERSION = 6,
  PKG_ERR_SHAPE = 7,
  PKG_ERR_NUMERIC = 8,
  PKG_ERR_INVALID_NODE = 9,
  PKG_ERR_DEGENERATE_SPLIT = 10,
  PKG_ERR_EMPTY_EVALUATION = 11,
  PKG_ERR_INVALID_CONDITION_LIST = 12,
  PKG_ERR_UNDEFINED_DELTA = 13,
  PKG_ERR_INVALID_INPUT = 14,
  PKG_ERR_WRITE = 15,
  PKG_ERR_ORACLE_TOO_LARGE = 16,
  PKG_ERR_INVALID_ARGUMENT = 17,
  PKG_ERR_UNKNOWN = 18
} pkg_status;

typedef struct pkg_schema pkg_schema;
typedef struct pkg_cohort pkg_cohort;
typedef struct pkg_graphs pkg_graphs;
typedef struct pkg_model pkg_model;
typedef struct pkg_plan pkg_plan;
typedef struct pkg_results pkg_results;

const char* pkg_version(void);
const char* pkg_last_error(void);
void pkg_string_free(char* s);

/* ---- schema ---- */

/* version is "V1" (directed) or "V3" (undirected) */
pkg_status pkg_schema_default(const char* version, pkg_schema** out);
pkg_status pkg_schema_from_json(const char* json, pkg_schema** out);
pkg_status pkg_schema_to_json(const pkg_schema* schema, char** out_json);
void pkg_schema_free(pkg_schema* schema);

/* ---- cohort ---- */

/* format is "csv" or "jsonl" */
pkg_status pkg_cohort_read(const char* path, const char* format,
                           pkg_cohort** out);
pkg_status pkg_cohort_parse(const char* text, const char* format,
                            pkg_cohort** out);
pkg_status pkg_cohort_write(const pkg_cohort* cohort, const char* path,
                            const char* format);
pkg_status pkg_cohort_to_text(const pkg_cohort* cohort, const char* format,
                              char** out_text);
/* index admission selection + 30-day style labeling */
pkg_status pkg_cohort_label(const pkg_cohort* cohort, int window_days,
                            pkg_cohort** out);
/* dict_json: {"keyword": {"facet": "...", "value": "..."}, ...} */
pkg_status pkg_cohort_enrich(const pkg_cohort* cohort, const char* dict_json,
                             pkg_cohort** out);
pkg_status pkg_cohort_sample(const pkg_cohort* cohort, size_t n, uint64_t seed,
                             pkg_cohort** out);
/* summary + missingness of a labeled cohort as one JSON document */
pkg_status pkg_cohort_summary_json(const pkg_cohort* cohort,
                                   const pkg_schema* schema, char** out_json);
pkg_status pkg_cohort_size(const pkg_cohort* cohort, size_t* n_records,
                           size_t* n_index);
void pkg_cohort_free(pkg_cohort* cohort);

/* ---- synthetic data ---- */

pkg_status pkg_synth_generate(const char* config_json, pkg_cohort** out);
pkg_status pkg_synth_bayes_accuracy(const char* config_json, double* out);

/* ---- graphs ---- */

/* mask_json may be NULL; otherwise
 * {"excluded_facets": [...], "excluded_codes": {"facet": [...]}} */
pkg_status pkg_graphs_build(const pkg_cohort* cohort, const pkg_schema* schema,
                            const char* mask_json, pkg_graphs** out);
pkg_status pkg_graphs_read(const char* path, pkg_graphs** out);
pkg_status pkg_graphs_write(const pkg_graphs* graphs, const char* path);
pkg_status pkg_graphs_to_jsonl(const pkg_graphs* graphs, char** out_text);
pkg_status pkg_graphs_count(const pkg_graphs* graphs, size_t* out);
void pkg_graphs_free(pkg_graphs* graphs);

/* ---- training ---- */

/* trains on an internal stratified split; out_metrics_json carries the test
 * metrics and per-epoch history */
pkg_status pkg_train(const pkg_graphs* graphs, const char* train_config_json,
                     pkg_model** out_model, char** out_metrics_json);
pkg_status pkg_model_to_json(const pkg_model* model, char** out_json);
pkg_status pkg_model_from_json(const char* json, pkg_model** out);
pkg_status pkg_model_predict(const pkg_model* model, const pkg_graphs* graphs,
                             size_t index, double* out_probability);
pkg_status pkg_model_evaluate(const pkg_model* model, const pkg_graphs* graphs,
                              double threshold, char** out_metrics_json);
void pkg_model_free(pkg_model* model);

/* ---- ablation ---- */

/* conditions_json may be NULL; otherwise {"facet": ["code", ...]} */
pkg_status pkg_plan_generate(const pkg_schema* schema,
                             const char* conditions_json, pkg_plan** out);
pkg_status pkg_plan_from_json(const char* json, const pkg_schema* schema,
                              pkg_plan** out);
pkg_status pkg_plan_to_json(const pkg_plan* plan, char** out_json);
pkg_status pkg_plan_size(const pkg_plan* plan, size_t* out);
void pkg_plan_free(pkg_plan* plan);

/* jobs < 1 means use hardware concurrency */
pkg_status pkg_ablation_run(const pkg_cohort* cohort, const pkg_schema* schema,
                            const pkg_plan* plan,
                            const char* train_config_json,
                            const uint64_t* seeds, size_t n_seeds, int jobs,
                            pkg_results** out);
pkg_status pkg_results_to_json(const pkg_results* results, char** out_json);
pkg_status pkg_results_from_json(const char* json, pkg_results** out);
/* format is "csv", "json", or "markdown"; includes the facet ranking */
pkg_status pkg_results_report(const pkg_results* results, const char* format,
                              char** out_text);
void pkg_results_free(pkg_results* results);

#ifdef __cplusplus
}
#endif

#endif /* PKGRAPH_H */
