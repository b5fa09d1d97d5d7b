// pkg command line: synth | summarize | enrich | build-graphs | train | ablate
//
// Every artifact is written atomically (temp file + rename) and gets a
// sibling <output>.manifest.json run record. Errors from the library come
// out as one machine-readable JSON line on stderr with exit code 1; usage
// errors exit 2.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pkgraph.h"

namespace {

struct ApiError {
  pkg_status status;
  std::string message;
};

struct UsageError {
  std::string message;
};

const char* status_name(pkg_status st) {
  switch (st) {
    case PKG_OK: return "Ok";
    case PKG_ERR_IO: return "IoError";
    case PKG_ERR_PARSE: return "ParseError";
    case PKG_ERR_DUPLICATE_ADMISSION: return "DuplicateAdmissionError";
    case PKG_ERR_INVALID_WINDOW: return "InvalidWindowError";
    case PKG_ERR_SAMPLE_TOO_LARGE: return "SampleTooLargeError";
    case PKG_ERR_UNSUPPORTED_VERSION: return "UnsupportedVersionError";
    case PKG_ERR_SHAPE: return "ShapeError";
    case PKG_ERR_NUMERIC: return "NumericError";
    case PKG_ERR_INVALID_NODE: return "InvalidNodeError";
    case PKG_ERR_DEGENERATE_SPLIT: return "DegenerateSplitError";
    case PKG_ERR_EMPTY_EVALUATION: return "EmptyEvaluationError";
    case PKG_ERR_INVALID_CONDITION_LIST: return "InvalidConditionListError";
    case PKG_ERR_UNDEFINED_DELTA: return "UndefinedDeltaError";
    case PKG_ERR_INVALID_INPUT: return "InvalidInputError";
    case PKG_ERR_WRITE: return "WriteError";
    case PKG_ERR_ORACLE_TOO_LARGE: return "OracleTooLargeError";
    case PKG_ERR_INVALID_ARGUMENT: return "InvalidArgumentError";
    case PKG_ERR_UNKNOWN: break;
  }
  return "UnknownError";
}

void check(pkg_status st) {
  if (st != PKG_OK) throw ApiError{st, pkg_last_error()};
}

// takes ownership of the C string
std::string take_string(char* s) {
  std::string out = s == nullptr ? "" : s;
  pkg_string_free(s);
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ApiError{PKG_ERR_IO, "cannot open '" + path + "' for reading"};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ApiError{PKG_ERR_WRITE, "cannot open '" + tmp + "'"};
    out << content;
    out.flush();
    if (!out) throw ApiError{PKG_ERR_WRITE, "short write to '" + tmp + "'"};
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ApiError{PKG_ERR_WRITE, "cannot rename '" + tmp + "' to '" + path + "'"};
  }
}

std::string cohort_format_for(const std::string& path) {
  if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl") {
    return "jsonl";
  }
  return "csv";
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct RunContext {
  std::string command;
  std::map<std::string, std::string> arguments;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<uint64_t> seeds;
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();
  bool quiet = false;

  void note(const std::string& line) const {
    if (!quiet) std::printf("%s\n", line.c_str());
  }

  void emit(const std::string& path, const std::string& content) {
    write_atomic(path, content);
    outputs.push_back(path);
    note("wrote " + path);
  }

  void write_manifests() const {
    const double duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    nlohmann::json manifest;
    manifest["command"] = command;
    manifest["arguments"] = arguments;
    manifest["seeds"] = seeds;
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    manifest["toolkit_version"] = pkg_version();
    manifest["duration_seconds"] = duration;
    manifest["written_at"] = iso_timestamp();
    for (const auto& path : outputs) {
      write_atomic(path + ".manifest.json", manifest.dump(2) + "\n");
    }
  }
};

// RAII wrappers so error paths cannot leak C handles
template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  ~Handle() { Free(ptr); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using SchemaHandle = Handle<pkg_schema, pkg_schema_free>;
using CohortHandle = Handle<pkg_cohort, pkg_cohort_free>;
using GraphsHandle = Handle<pkg_graphs, pkg_graphs_free>;
using ModelHandle = Handle<pkg_model, pkg_model_free>;
using PlanHandle = Handle<pkg_plan, pkg_plan_free>;
using ResultsHandle = Handle<pkg_results, pkg_results_free>;

void load_schema(const std::string& schema_path, const std::string& version,
                 RunContext& ctx, SchemaHandle& schema) {
  if (!schema_path.empty()) {
    check(pkg_schema_from_json(read_text_file(schema_path).c_str(), schema.out()));
    ctx.inputs.push_back(schema_path);
  } else {
    check(pkg_schema_default(version.c_str(), schema.out()));
  }
}

void load_labeled_cohort(const std::string& cohort_path, RunContext& ctx,
                         CohortHandle& labeled) {
  CohortHandle raw;
  check(pkg_cohort_read(cohort_path.c_str(),
                        cohort_format_for(cohort_path).c_str(), raw.out()));
  check(pkg_cohort_label(raw.get(), 30, labeled.out()));
  ctx.inputs.push_back(cohort_path);
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t used = 0;
      const uint64_t value = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      seeds.push_back(value);
    } catch (const std::exception&) {
      throw UsageError{"--seeds: '" + item + "' is not a non-negative integer"};
    }
  }
  if (seeds.empty()) throw UsageError{"--seeds: need at least one seed"};
  return seeds;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"person-centric knowledge graph readmission toolkit"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress output");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  std::string synth_config, synth_out;
  synth->add_option("--config", synth_config, "synthetic config JSON")
      ->required();
  synth->add_option("--out", synth_out, "output cohort (.csv or .jsonl)")
      ->required();

  // summarize
  auto* summarize = app.add_subcommand(
      "summarize", "label the cohort and emit summary + missingness");
  std::string sum_cohort, sum_schema, sum_out, sum_version = "V1";
  summarize->add_option("--cohort", sum_cohort, "cohort file")->required();
  summarize->add_option("--schema", sum_schema, "schema JSON (default built-in)");
  summarize->add_option("--version", sum_version, "graph version when no schema");
  summarize->add_option("--out", sum_out, "summary JSON output")->required();

  // enrich
  auto* enrich = app.add_subcommand(
      "enrich", "fill absent social facets from note text");
  std::string enr_cohort, enr_dict, enr_out;
  enrich->add_option("--cohort", enr_cohort, "cohort file")->required();
  enrich->add_option("--dict", enr_dict, "concept dictionary JSON")->required();
  enrich->add_option("--out", enr_out, "enriched cohort output")->required();

  // build-graphs
  auto* build = app.add_subcommand("build-graphs",
                                   "emit one graph per index admission");
  std::string bg_cohort, bg_schema, bg_version = "V1", bg_out;
  build->add_option("--cohort", bg_cohort, "cohort file")->required();
  build->add_option("--schema", bg_schema, "schema JSON (default built-in)");
  build->add_option("--version", bg_version, "V1 (directed) or V3 (undirected)");
  build->add_option("--out", bg_out, "graphs JSONL output")->required();

  // train
  auto* train = app.add_subcommand("train", "train a readmission classifier");
  std::string tr_graphs, tr_config, tr_out, tr_metrics;
  train->add_option("--graphs", tr_graphs, "graphs JSONL")->required();
  train->add_option("--train-config", tr_config, "train config JSON")
      ->required();
  train->add_option("--out", tr_out, "model checkpoint output")->required();
  train->add_option("--metrics", tr_metrics, "metrics JSON output");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run the exclusion sweep");
  std::string ab_cohort, ab_schema, ab_version = "V1", ab_config, ab_seeds;
  std::string ab_conditions, ab_plan, ab_out, ab_report, ab_markdown;
  int ab_jobs = 0;
  ablate->add_option("--cohort", ab_cohort, "cohort file")->required();
  ablate->add_option("--schema", ab_schema, "schema JSON (default built-in)");
  ablate->add_option("--version", ab_version, "graph version when no schema");
  ablate->add_option("--train-config", ab_config, "train config JSON")
      ->required();
  ablate->add_option("--seeds", ab_seeds, "comma-separated seeds")->required();
  ablate->add_option("--conditions", ab_conditions,
                     "condition list JSON {facet: [codes]}");
  ablate->add_option("--plan", ab_plan, "override plan JSON");
  ablate->add_option("--out", ab_out, "results JSON output")->required();
  ablate->add_option("--report", ab_report, "report CSV output");
  ablate->add_option("--markdown", ab_markdown, "ranking Markdown output");
  ablate->add_option("--jobs", ab_jobs,
                     "parallel cells (default: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help text or the usage error
    return code == 0 ? 0 : 2;
  }

  RunContext ctx;
  ctx.quiet = quiet;

  if (synth->parsed()) {
    ctx.command = "synth";
    ctx.arguments = {{"config", synth_config}, {"out", synth_out}};
    ctx.inputs.push_back(synth_config);
    const std::string config_json = read_text_file(synth_config);
    CohortHandle cohort;
    check(pkg_synth_generate(config_json.c_str(), cohort.out()));
    char* text = nullptr;
    const std::string fmt = cohort_format_for(synth_out);
    check(pkg_cohort_to_text(cohort.get(), fmt.c_str(), &text));
    ctx.emit(synth_out, take_string(text));
  } else if (summarize->parsed()) {
    ctx.command = "summarize";
    ctx.arguments = {{"cohort", sum_cohort},
                     {"schema", sum_schema},
                     {"version", sum_version},
                     {"out", sum_out}};
    SchemaHandle schema;
    load_schema(sum_schema, sum_version, ctx, schema);
    CohortHandle labeled;
    load_labeled_cohort(sum_cohort, ctx, labeled);
    char* json = nullptr;
    check(pkg_cohort_summary_json(labeled.get(), schema.get(), &json));
    ctx.emit(sum_out, take_string(json) + "\n");
  } else if (enrich->parsed()) {
    ctx.command = "enrich";
    ctx.arguments = {{"cohort", enr_cohort}, {"dict", enr_dict}, {"out", enr_out}};
    CohortHandle cohort;
    check(pkg_cohort_read(enr_cohort.c_str(),
                          cohort_format_for(enr_cohort).c_str(), cohort.out()));
    ctx.inputs.push_back(enr_cohort);
    const std::string dict_json = read_text_file(enr_dict);
    ctx.inputs.push_back(enr_dict);
    CohortHandle enriched;
    check(pkg_cohort_enrich(cohort.get(), dict_json.c_str(), enriched.out()));
    char* text = nullptr;
    const std::string fmt = cohort_format_for(enr_out);
    check(pkg_cohort_to_text(enriched.get(), fmt.c_str(), &text));
    ctx.emit(enr_out, take_string(text));
  } else if (build->parsed()) {
    ctx.command = "build-graphs";
    ctx.arguments = {{"cohort", bg_cohort},
                     {"schema", bg_schema},
                     {"version", bg_version},
                     {"out", bg_out}};
    SchemaHandle schema;
    load_schema(bg_schema, bg_version, ctx, schema);
    CohortHandle labeled;
    load_labeled_cohort(bg_cohort, ctx, labeled);
    GraphsHandle graphs;
    check(pkg_graphs_build(labeled.get(), schema.get(), nullptr, graphs.out()));
    char* text = nullptr;
    check(pkg_graphs_to_jsonl(graphs.get(), &text));
    ctx.emit(bg_out, take_string(text));
  } else if (train->parsed()) {
    ctx.command = "train";
    ctx.arguments = {{"graphs", tr_graphs},
                     {"train-config", tr_config},
                     {"out", tr_out},
                     {"metrics", tr_metrics}};
    GraphsHandle graphs;
    check(pkg_graphs_read(tr_graphs.c_str(), graphs.out()));
    ctx.inputs.push_back(tr_graphs);
    const std::string config_json = read_text_file(tr_config);
    ctx.inputs.push_back(tr_config);
    ModelHandle model;
    char* metrics_json = nullptr;
    check(pkg_train(graphs.get(), config_json.c_str(), model.out(),
                    &metrics_json));
    const std::string metrics = take_string(metrics_json);
    char* model_json = nullptr;
    check(pkg_model_to_json(model.get(), &model_json));
    ctx.emit(tr_out, take_string(model_json) + "\n");
    if (!tr_metrics.empty()) ctx.emit(tr_metrics, metrics + "\n");
  } else if (ablate->parsed()) {
    ctx.command = "ablate";
    ctx.arguments = {{"cohort", ab_cohort},     {"schema", ab_schema},
                     {"version", ab_version},   {"train-config", ab_config},
                     {"seeds", ab_seeds},       {"conditions", ab_conditions},
                     {"plan", ab_plan},         {"out", ab_out},
                     {"report", ab_report},     {"markdown", ab_markdown},
                     {"jobs", std::to_string(ab_jobs)}};
    ctx.seeds = parse_seeds(ab_seeds);
    SchemaHandle schema;
    load_schema(ab_schema, ab_version, ctx, schema);
    CohortHandle labeled;
    load_labeled_cohort(ab_cohort, ctx, labeled);

    PlanHandle plan;
    if (!ab_plan.empty()) {
      check(pkg_plan_from_json(read_text_file(ab_plan).c_str(), schema.get(),
                               plan.out()));
      ctx.inputs.push_back(ab_plan);
    } else if (!ab_conditions.empty()) {
      check(pkg_plan_generate(schema.get(),
                              read_text_file(ab_conditions).c_str(), plan.out()));
      ctx.inputs.push_back(ab_conditions);
    } else {
      check(pkg_plan_generate(schema.get(), nullptr, plan.out()));
    }

    const std::string config_json = read_text_file(ab_config);
    ctx.inputs.push_back(ab_config);
    ResultsHandle results;
    check(pkg_ablation_run(labeled.get(), schema.get(), plan.get(),
                           config_json.c_str(), ctx.seeds.data(),
                           ctx.seeds.size(), ab_jobs, results.out()));

    char* json = nullptr;
    check(pkg_results_to_json(results.get(), &json));
    ctx.emit(ab_out, take_string(json) + "\n");
    if (!ab_report.empty()) {
      char* csv = nullptr;
      check(pkg_results_report(results.get(), "csv", &csv));
      ctx.emit(ab_report, take_string(csv));
    }
    if (!ab_markdown.empty()) {
      char* md = nullptr;
      check(pkg_results_report(results.get(), "markdown", &md));
      ctx.emit(ab_markdown, take_string(md));
    }
  }

  ctx.write_manifests();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const UsageError& e) {
    nlohmann::json err{{"error", "UsageError"}, {"message", e.message}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 2;
  } catch (const ApiError& e) {
    nlohmann::json err{{"error", status_name(e.status)}, {"message", e.message}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "UnknownError"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
}
