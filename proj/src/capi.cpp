#include "pkgraph.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pkg/ablation.hpp"
#include "pkg/error.hpp"
#include "pkg/graph.hpp"
#include "pkg/ingest.hpp"
#include "pkg/metrics.hpp"
#include "pkg/report.hpp"
#include "pkg/sage.hpp"
#include "pkg/schema.hpp"
#include "pkg/synth.hpp"

struct pkg_schema {
  pkg::Schema value;
};
struct pkg_cohort {
  pkg::CohortDataset value;
};
struct pkg_graphs {
  std::vector<pkg::PatientGraph> value;
};
struct pkg_model {
  pkg::SageModel value;
};
struct pkg_plan {
  pkg::AblationPlan value;
};
struct pkg_results {
  pkg::AblationResults value;
};

namespace {

thread_local std::string g_last_error;

pkg_status status_from(pkg::ErrorCode code) {
  using pkg::ErrorCode;
  switch (code) {
    case ErrorCode::Io: return PKG_ERR_IO;
    case ErrorCode::Parse: return PKG_ERR_PARSE;
    case ErrorCode::DuplicateAdmission: return PKG_ERR_DUPLICATE_ADMISSION;
    case ErrorCode::InvalidWindow: return PKG_ERR_INVALID_WINDOW;
    case ErrorCode::SampleTooLarge: return PKG_ERR_SAMPLE_TOO_LARGE;
    case ErrorCode::UnsupportedVersion: return PKG_ERR_UNSUPPORTED_VERSION;
    case ErrorCode::Shape: return PKG_ERR_SHAPE;
    case ErrorCode::Numeric: return PKG_ERR_NUMERIC;
    case ErrorCode::InvalidNode: return PKG_ERR_INVALID_NODE;
    case ErrorCode::DegenerateSplit: return PKG_ERR_DEGENERATE_SPLIT;
    case ErrorCode::EmptyEvaluation: return PKG_ERR_EMPTY_EVALUATION;
    case ErrorCode::InvalidConditionList: return PKG_ERR_INVALID_CONDITION_LIST;
    case ErrorCode::UndefinedDelta: return PKG_ERR_UNDEFINED_DELTA;
    case ErrorCode::InvalidInput: return PKG_ERR_INVALID_INPUT;
    case ErrorCode::Write: return PKG_ERR_WRITE;
    case ErrorCode::OracleTooLarge: return PKG_ERR_ORACLE_TOO_LARGE;
    case ErrorCode::InvalidArgument: return PKG_ERR_INVALID_ARGUMENT;
  }
  return PKG_ERR_UNKNOWN;
}

template <typename F>
pkg_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const pkg::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PKG_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return PKG_ERR_UNKNOWN;
  }
}

pkg_status fail_arg(const char* message) {
  g_last_error = message;
  return PKG_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p != nullptr) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

pkg::CohortFormat format_from(const char* format) {
  const std::string f = format;
  if (f == "csv") return pkg::CohortFormat::Csv;
  if (f == "jsonl") return pkg::CohortFormat::Jsonl;
  pkg::raise(pkg::ErrorCode::InvalidArgument,
             "unknown cohort format '" + f + "' (want csv or jsonl)");
}

std::map<std::string, std::set<std::string>> parse_conditions(
    const char* conditions_json) {
  std::map<std::string, std::set<std::string>> out;
  if (conditions_json == nullptr) return out;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(conditions_json);
    if (!doc.is_object()) {
      pkg::raise(pkg::ErrorCode::Parse,
                 "condition list must be {\"facet\": [codes]}");
    }
    for (const auto& [facet, codes] : doc.items()) {
      for (const auto& c : codes) {
        out[facet].insert(c.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    pkg::raise(pkg::ErrorCode::Parse,
               std::string("condition list JSON: ") + e.what());
  }
  return out;
}

}  // namespace

extern "C" {

const char* pkg_version(void) { return "0.1.0"; }

const char* pkg_last_error(void) { return g_last_error.c_str(); }

void pkg_string_free(char* s) { std::free(s); }

/* ---- schema ---- */

pkg_status pkg_schema_default(const char* version, pkg_schema** out) {
  if (version == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_schema{pkg::default_schema(pkg::version_from_string(version))};
    return PKG_OK;
  });
}

pkg_status pkg_schema_from_json(const char* json, pkg_schema** out) {
  if (json == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_schema{pkg::Schema::from_json(json)};
    return PKG_OK;
  });
}

pkg_status pkg_schema_to_json(const pkg_schema* schema, char** out_json) {
  if (schema == nullptr || out_json == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out_json = dup_string(schema->value.to_json());
    return PKG_OK;
  });
}

void pkg_schema_free(pkg_schema* schema) { delete schema; }

/* ---- cohort ---- */

pkg_status pkg_cohort_read(const char* path, const char* format,
                           pkg_cohort** out) {
  if (path == nullptr || format == nullptr || out == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    *out = new pkg_cohort{pkg::parse_cohort(path, format_from(format))};
    return PKG_OK;
  });
}

pkg_status pkg_cohort_parse(const char* text, const char* format,
                            pkg_cohort** out) {
  if (text == nullptr || format == nullptr || out == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    *out = new pkg_cohort{pkg::parse_cohort_text(text, format_from(format))};
    return PKG_OK;
  });
}

pkg_status pkg_cohort_write(const pkg_cohort* cohort, const char* path,
                            const char* format) {
  if (cohort == nullptr || path == nullptr || format == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    pkg::write_cohort(cohort->value, path, format_from(format));
    return PKG_OK;
  });
}

pkg_status pkg_cohort_to_text(const pkg_cohort* cohort, const char* format,
                              char** out_text) {
  if (cohort == nullptr || format == nullptr || out_text == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    *out_text = dup_string(pkg::cohort_to_text(cohort->value, format_from(format)));
    return PKG_OK;
  });
}

pkg_status pkg_cohort_label(const pkg_cohort* cohort, int window_days,
                            pkg_cohort** out) {
  if (cohort == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_cohort{
        pkg::label_readmissions(cohort->value.records, window_days)};
    return PKG_OK;
  });
}

pkg_status pkg_cohort_enrich(const pkg_cohort* cohort, const char* dict_json,
                             pkg_cohort** out) {
  if (cohort == nullptr || dict_json == nullptr || out == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    const auto dict = pkg::ConceptDictionary::from_json(dict_json);
    *out = new pkg_cohort{pkg::enrich_social(cohort->value, dict)};
    return PKG_OK;
  });
}

pkg_status pkg_cohort_sample(const pkg_cohort* cohort, size_t n, uint64_t seed,
                             pkg_cohort** out) {
  if (cohort == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_cohort{pkg::sample_cohort(cohort->value, n, seed)};
    return PKG_OK;
  });
}

pkg_status pkg_cohort_summary_json(const pkg_cohort* cohort,
                                   const pkg_schema* schema, char** out_json) {
  if (cohort == nullptr || schema == nullptr || out_json == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    const auto summary = pkg::summarize(cohort->value, schema->value);
    const auto missing = pkg::assess_missingness(cohort->value, schema->value);
    *out_json = dup_string(pkg::summary_to_json(summary, missing));
    return PKG_OK;
  });
}

pkg_status pkg_cohort_size(const pkg_cohort* cohort, size_t* n_records,
                           size_t* n_index) {
  if (cohort == nullptr) return fail_arg("null argument");
  g_last_error.clear();
  if (n_records != nullptr) *n_records = cohort->value.records.size();
  if (n_index != nullptr) *n_index = cohort->value.index_admissions.size();
  return PKG_OK;
}

void pkg_cohort_free(pkg_cohort* cohort) { delete cohort; }

/* ---- synthetic data ---- */

pkg_status pkg_synth_generate(const char* config_json, pkg_cohort** out) {
  if (config_json == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    const auto cfg = pkg::SyntheticConfig::from_json(config_json);
    *out = new pkg_cohort{pkg::generate_cohort(cfg)};
    return PKG_OK;
  });
}

pkg_status pkg_synth_bayes_accuracy(const char* config_json, double* out) {
  if (config_json == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    const auto cfg = pkg::SyntheticConfig::from_json(config_json);
    *out = pkg::bayes_accuracy(cfg);
    return PKG_OK;
  });
}

/* ---- graphs ---- */

pkg_status pkg_graphs_build(const pkg_cohort* cohort, const pkg_schema* schema,
                            const char* mask_json, pkg_graphs** out) {
  if (cohort == nullptr || schema == nullptr || out == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    pkg::FacetMask mask;
    if (mask_json != nullptr) mask = pkg::FacetMask::from_json(mask_json);
    *out = new pkg_graphs{pkg::build_graphs(cohort->value, schema->value, mask)};
    return PKG_OK;
  });
}

pkg_status pkg_graphs_read(const char* path, pkg_graphs** out) {
  if (path == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_graphs{pkg::read_graphs_jsonl(path)};
    return PKG_OK;
  });
}

pkg_status pkg_graphs_write(const pkg_graphs* graphs, const char* path) {
  if (graphs == nullptr || path == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    pkg::write_graphs_jsonl(graphs->value, path);
    return PKG_OK;
  });
}

pkg_status pkg_graphs_to_jsonl(const pkg_graphs* graphs, char** out_text) {
  if (graphs == nullptr || out_text == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out_text = dup_string(pkg::graphs_to_jsonl(graphs->value));
    return PKG_OK;
  });
}

pkg_status pkg_graphs_count(const pkg_graphs* graphs, size_t* out) {
  if (graphs == nullptr || out == nullptr) return fail_arg("null argument");
  g_last_error.clear();
  *out = graphs->value.size();
  return PKG_OK;
}

void pkg_graphs_free(pkg_graphs* graphs) { delete graphs; }

/* ---- training ---- */

pkg_status pkg_train(const pkg_graphs* graphs, const char* train_config_json,
                     pkg_model** out_model, char** out_metrics_json) {
  if (graphs == nullptr || train_config_json == nullptr ||
      out_model == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    const auto config = pkg::TrainConfig::from_json(train_config_json);
    auto result = pkg::train(graphs->value, config);
    if (out_metrics_json != nullptr) {
      nlohmann::json doc;
      doc["test"] = nlohmann::json::parse(pkg::metrics_to_json(result.test));
      doc["history"] = nlohmann::json::array();
      for (const auto& epoch : result.history) {
        doc["history"].push_back(
            {{"train_loss", epoch.train_loss},
             {"val", nlohmann::json::parse(pkg::metrics_to_json(epoch.val))}});
      }
      *out_metrics_json = dup_string(doc.dump(2));
    }
    *out_model = new pkg_model{std::move(result.model)};
    return PKG_OK;
  });
}

pkg_status pkg_model_to_json(const pkg_model* model, char** out_json) {
  if (model == nullptr || out_json == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out_json = dup_string(pkg::model_to_json(model->value));
    return PKG_OK;
  });
}

pkg_status pkg_model_from_json(const char* json, pkg_model** out) {
  if (json == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_model{pkg::model_from_json(json)};
    return PKG_OK;
  });
}

pkg_status pkg_model_predict(const pkg_model* model, const pkg_graphs* graphs,
                             size_t index, double* out_probability) {
  if (model == nullptr || graphs == nullptr || out_probability == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    if (index >= graphs->value.size()) {
      pkg::raise(pkg::ErrorCode::InvalidArgument,
                 "graph index " + std::to_string(index) + " out of range");
    }
    *out_probability = pkg::predict(model->value, graphs->value[index]);
    return PKG_OK;
  });
}

pkg_status pkg_model_evaluate(const pkg_model* model, const pkg_graphs* graphs,
                              double threshold, char** out_metrics_json) {
  if (model == nullptr || graphs == nullptr || out_metrics_json == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    const auto metrics = pkg::evaluate(model->value, graphs->value, threshold);
    *out_metrics_json = dup_string(pkg::metrics_to_json(metrics));
    return PKG_OK;
  });
}

void pkg_model_free(pkg_model* model) { delete model; }

/* ---- ablation ---- */

pkg_status pkg_plan_generate(const pkg_schema* schema,
                             const char* conditions_json, pkg_plan** out) {
  if (schema == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_plan{
        pkg::generate_plans(schema->value, parse_conditions(conditions_json))};
    return PKG_OK;
  });
}

pkg_status pkg_plan_from_json(const char* json, const pkg_schema* schema,
                              pkg_plan** out) {
  if (json == nullptr || schema == nullptr || out == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    *out = new pkg_plan{pkg::AblationPlan::from_json(json, schema->value)};
    return PKG_OK;
  });
}

pkg_status pkg_plan_to_json(const pkg_plan* plan, char** out_json) {
  if (plan == nullptr || out_json == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out_json = dup_string(plan->value.to_json());
    return PKG_OK;
  });
}

pkg_status pkg_plan_size(const pkg_plan* plan, size_t* out) {
  if (plan == nullptr || out == nullptr) return fail_arg("null argument");
  g_last_error.clear();
  *out = plan->value.configs.size();
  return PKG_OK;
}

void pkg_plan_free(pkg_plan* plan) { delete plan; }

pkg_status pkg_ablation_run(const pkg_cohort* cohort, const pkg_schema* schema,
                            const pkg_plan* plan,
                            const char* train_config_json,
                            const uint64_t* seeds, size_t n_seeds, int jobs,
                            pkg_results** out) {
  if (cohort == nullptr || schema == nullptr || plan == nullptr ||
      train_config_json == nullptr || seeds == nullptr || out == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    const auto config = pkg::TrainConfig::from_json(train_config_json);
    const std::vector<uint64_t> seed_list(seeds, seeds + n_seeds);
    *out = new pkg_results{pkg::run_sweep(cohort->value, schema->value,
                                          plan->value, config, seed_list, jobs)};
    return PKG_OK;
  });
}

pkg_status pkg_results_to_json(const pkg_results* results, char** out_json) {
  if (results == nullptr || out_json == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out_json = dup_string(pkg::results_to_json(results->value));
    return PKG_OK;
  });
}

pkg_status pkg_results_from_json(const char* json, pkg_results** out) {
  if (json == nullptr || out == nullptr) return fail_arg("null argument");
  return guarded([&]() {
    *out = new pkg_results{pkg::results_from_json(json)};
    return PKG_OK;
  });
}

pkg_status pkg_results_report(const pkg_results* results, const char* format,
                              char** out_text) {
  if (results == nullptr || format == nullptr || out_text == nullptr) {
    return fail_arg("null argument");
  }
  return guarded([&]() {
    const auto fmt = pkg::report_format_from_string(format);
    const auto ranking = pkg::rank_facets(results->value);
    *out_text = dup_string(pkg::render_report(results->value, ranking, fmt));
    return PKG_OK;
  });
}

void pkg_results_free(pkg_results* results) { delete results; }

}  // extern "C"
