#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pkg/cohort.hpp"
#include "pkg/graph.hpp"
#include "pkg/metrics.hpp"
#include "pkg/sage.hpp"
#include "pkg/schema.hpp"

namespace pkg {

enum class AblationLevel {
  Baseline,
  Facet,
  View,
  ClinicalPair,
  AllClinical,
  ConditionList,
};

std::string to_string(AblationLevel level);
AblationLevel ablation_level_from_string(const std::string& s);

struct AblationConfig {
  std::string name;
  FacetMask mask;
  AblationLevel level = AblationLevel::Facet;

  bool operator==(const AblationConfig&) const = default;
};

/// Ordered exclusion plan; the baseline (empty mask) comes first.
struct AblationPlan {
  std::vector<AblationConfig> configs;

  void validate(const Schema& schema) const;
  std::string to_json() const;
  static AblationPlan from_json(const std::string& text, const Schema& schema);
  bool operator==(const AblationPlan&) const = default;
};

/// The full exclusion protocol: baseline, every single facet, every view,
/// the three clinical pairs, all clinical facets, and optionally a named
/// condition (code) list. condition_codes maps clinical facets to code sets.
AblationPlan generate_plans(
    const Schema& schema,
    const std::map<std::string, std::set<std::string>>& condition_codes = {});

/// Relative decline (baseline - ablated) / baseline * 100. Negative means
/// the ablated run improved. Baseline <= 0 raises UndefinedDelta.
double percentage_decrease(double baseline, double ablated);

struct CellResult {
  std::string config;
  uint64_t seed = 0;
  Metrics metrics;
  bool failed = false;
  std::string error;

  bool operator==(const CellResult&) const = default;
};

struct ConfigStats {
  std::string name;
  AblationLevel level = AblationLevel::Facet;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double precision_mean = 0.0, precision_std = 0.0;
  double recall_mean = 0.0, recall_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
  double pct_dec_accuracy = 0.0;
  double pct_dec_f1 = 0.0;
  int n_seeds = 0;
  int failed_cells = 0;

  bool operator==(const ConfigStats&) const = default;
};

struct AblationResults {
  std::vector<uint64_t> seeds;
  std::vector<ConfigStats> configs;  // plan order
  std::vector<CellResult> cells;     // config-major, then seed order

  const ConfigStats* find(const std::string& name) const;
  const CellResult* cell(const std::string& name, uint64_t seed) const;
  bool operator==(const AblationResults&) const = default;
};

/// Retrain-per-exclusion sweep. For every config x seed cell the graphs are
/// rebuilt under the config's mask and a model is trained from scratch with
/// that seed; percentage decreases are taken against the same-seed baseline
/// cell and then averaged. Cells that fail with DegenerateSplit are recorded
/// and excluded from the aggregates. Results depend only on
/// (cohort, schema, plan, config, seeds), never on jobs.
AblationResults run_sweep(const CohortDataset& cohort, const Schema& schema,
                          const AblationPlan& plan, const TrainConfig& config,
                          const std::vector<uint64_t>& seeds, int jobs = 1);

}  // namespace pkg
