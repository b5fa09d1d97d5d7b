#include "pkg/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "pkg/error.hpp"

namespace pkg {

namespace {

const char* kLevelNames[] = {"baseline",      "facet",        "view",
                             "clinical_pair", "all_clinical", "condition_list"};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// sample std (n-1); 0 when fewer than two values
MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return out;
}

nlohmann::json mask_to_json_value(const FacetMask& mask) {
  return nlohmann::json::parse(mask.to_json());
}

}  // namespace

std::string to_string(AblationLevel level) {
  return kLevelNames[static_cast<int>(level)];
}

AblationLevel ablation_level_from_string(const std::string& s) {
  for (int i = 0; i < 6; ++i) {
    if (s == kLevelNames[i]) return static_cast<AblationLevel>(i);
  }
  raise(ErrorCode::Parse, "unknown ablation level '" + s + "'");
}

void AblationPlan::validate(const Schema& schema) const {
  if (configs.empty()) raise(ErrorCode::InvalidInput, "ablation plan is empty");
  std::set<std::string> names;
  int n_baseline = 0;
  for (const auto& cfg : configs) {
    if (cfg.name.empty()) raise(ErrorCode::InvalidInput, "config with empty name");
    if (!names.insert(cfg.name).second) {
      raise(ErrorCode::InvalidInput, "duplicate config name '" + cfg.name + "'");
    }
    if (cfg.level == AblationLevel::Baseline) {
      ++n_baseline;
      if (!cfg.mask.empty()) {
        raise(ErrorCode::InvalidInput,
              "baseline config '" + cfg.name + "' has a non-empty mask");
      }
    }
    for (const auto& facet : cfg.mask.excluded_facets) {
      if (!schema.has(facet)) {
        raise(ErrorCode::InvalidInput,
              "config '" + cfg.name + "' excludes unknown facet '" + facet + "'");
      }
    }
    for (const auto& [facet, codes] : cfg.mask.excluded_codes) {
      if (!schema.has(facet)) {
        raise(ErrorCode::InvalidInput,
              "config '" + cfg.name + "' excludes codes of unknown facet '" +
                  facet + "'");
      }
      if (schema.find(facet)->arity != ValueArity::Multi) {
        raise(ErrorCode::InvalidConditionList,
              "config '" + cfg.name + "' lists codes for single-valued facet '" +
                  facet + "'");
      }
      if (codes.empty()) {
        raise(ErrorCode::InvalidInput,
              "config '" + cfg.name + "' has an empty code set for '" + facet +
                  "'");
      }
    }
  }
  if (n_baseline != 1) {
    raise(ErrorCode::InvalidInput,
          "plan must contain exactly one baseline config, found " +
              std::to_string(n_baseline));
  }
  if (configs.front().level != AblationLevel::Baseline) {
    raise(ErrorCode::InvalidInput, "baseline config must come first");
  }
}

std::string AblationPlan::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cfg : configs) {
    nlohmann::json j = mask_to_json_value(cfg.mask);
    j["name"] = cfg.name;
    j["level"] = to_string(cfg.level);
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

AblationPlan AblationPlan::from_json(const std::string& text,
                                     const Schema& schema) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("ablation plan JSON: ") + e.what());
  }
  if (!arr.is_array()) {
    raise(ErrorCode::Parse, "ablation plan JSON must be an array of configs");
  }
  AblationPlan plan;
  for (const auto& j : arr) {
    if (!j.is_object() || !j.contains("name")) {
      raise(ErrorCode::Parse, "plan entry needs a 'name'");
    }
    AblationConfig cfg;
    cfg.name = j["name"].get<std::string>();
    nlohmann::json mask_part = j;
    mask_part.erase("name");
    mask_part.erase("level");
    cfg.mask = FacetMask::from_json(mask_part.dump());
    if (j.contains("level")) {
      cfg.level = ablation_level_from_string(j["level"].get<std::string>());
    } else {
      // infer from the mask shape when an override plan omits the level
      if (cfg.mask.empty()) {
        cfg.level = AblationLevel::Baseline;
      } else if (!cfg.mask.excluded_codes.empty()) {
        cfg.level = AblationLevel::ConditionList;
      } else {
        cfg.level = cfg.mask.excluded_facets.size() == 1 ? AblationLevel::Facet
                                                         : AblationLevel::View;
      }
    }
    plan.configs.push_back(std::move(cfg));
  }
  plan.validate(schema);
  return plan;
}

AblationPlan generate_plans(
    const Schema& schema,
    const std::map<std::string, std::set<std::string>>& condition_codes) {
  AblationPlan plan;
  plan.configs.push_back({"baseline", {}, AblationLevel::Baseline});

  for (const auto& facet : schema.facets()) {
    AblationConfig cfg{"no_" + facet.name, {}, AblationLevel::Facet};
    cfg.mask.excluded_facets.insert(facet.name);
    plan.configs.push_back(std::move(cfg));
  }

  for (View view : {View::Demographic, View::Clinical, View::Social}) {
    auto members = schema.facets_of_view(view);
    if (members.empty()) continue;
    std::string view_name = to_string(view);
    std::transform(view_name.begin(), view_name.end(), view_name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    AblationConfig cfg{"no_view_" + view_name, {}, AblationLevel::View};
    for (const auto& facet : members) cfg.mask.excluded_facets.insert(facet.name);
    plan.configs.push_back(std::move(cfg));
  }

  const auto clinical = schema.facets_of_view(View::Clinical);
  for (size_t i = 0; i < clinical.size(); ++i) {
    for (size_t j = i + 1; j < clinical.size(); ++j) {
      AblationConfig cfg{"no_" + clinical[i].name + "_" + clinical[j].name,
                         {},
                         AblationLevel::ClinicalPair};
      cfg.mask.excluded_facets.insert(clinical[i].name);
      cfg.mask.excluded_facets.insert(clinical[j].name);
      plan.configs.push_back(std::move(cfg));
    }
  }
  if (!clinical.empty()) {
    AblationConfig cfg{"no_all_clinical", {}, AblationLevel::AllClinical};
    for (const auto& facet : clinical) cfg.mask.excluded_facets.insert(facet.name);
    plan.configs.push_back(std::move(cfg));
  }

  if (!condition_codes.empty()) {
    AblationConfig cfg{"no_listed_conditions", {}, AblationLevel::ConditionList};
    for (const auto& [facet, codes] : condition_codes) {
      if (!schema.has(facet) || schema.find(facet)->view != View::Clinical) {
        raise(ErrorCode::InvalidConditionList,
              "condition list names non-clinical facet '" + facet + "'");
      }
      for (const auto& code : codes) {
        cfg.mask.excluded_codes[facet].insert(normalize_code(code));
      }
    }
    plan.configs.push_back(std::move(cfg));
  }

  plan.validate(schema);
  return plan;
}

double percentage_decrease(double baseline, double ablated) {
  if (baseline <= 0.0) {
    raise(ErrorCode::UndefinedDelta,
          "percentage decrease undefined for baseline " +
              std::to_string(baseline));
  }
  return (baseline - ablated) / baseline * 100.0;
}

const ConfigStats* AblationResults::find(const std::string& name) const {
  for (const auto& c : configs) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const CellResult* AblationResults::cell(const std::string& name,
                                        uint64_t seed) const {
  for (const auto& c : cells) {
    if (c.config == name && c.seed == seed) return &c;
  }
  return nullptr;
}

AblationResults run_sweep(const CohortDataset& cohort, const Schema& schema,
                          const AblationPlan& plan, const TrainConfig& config,
                          const std::vector<uint64_t>& seeds, int jobs) {
  plan.validate(schema);
  config.validate();
  if (!cohort.labeled) {
    raise(ErrorCode::InvalidInput, "cohort must be labeled before a sweep");
  }
  if (seeds.empty()) raise(ErrorCode::InvalidInput, "need at least one seed");
  if (jobs < 1) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;

  const size_t n_configs = plan.configs.size();
  const size_t n_seeds = seeds.size();

  std::vector<std::vector<PatientGraph>> graphs_by_config;
  graphs_by_config.reserve(n_configs);
  for (const auto& cfg : plan.configs) {
    graphs_by_config.push_back(build_graphs(cohort, schema, cfg.mask));
  }

  AblationResults results;
  results.seeds = seeds;
  results.cells.resize(n_configs * n_seeds);

  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t slot = next.fetch_add(1);
      if (slot >= results.cells.size()) return;
      const size_t ci = slot / n_seeds;
      const size_t si = slot % n_seeds;
      CellResult& cell = results.cells[slot];
      cell.config = plan.configs[ci].name;
      cell.seed = seeds[si];
      try {
        TrainConfig cell_cfg = config;
        cell_cfg.seed = seeds[si];
        cell.metrics = train(graphs_by_config[ci], cell_cfg).test;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateSplit) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
        cell.failed = true;
        cell.error = e.what();
        cell.metrics = Metrics{};
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const size_t n_workers =
      std::min(static_cast<size_t>(jobs), results.cells.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  auto cell_at = [&](size_t ci, size_t si) -> const CellResult& {
    return results.cells[ci * n_seeds + si];
  };

  for (size_t ci = 0; ci < n_configs; ++ci) {
    const AblationConfig& cfg = plan.configs[ci];
    ConfigStats stats;
    stats.name = cfg.name;
    stats.level = cfg.level;
    stats.n_seeds = static_cast<int>(n_seeds);

    std::vector<double> acc, prec, rec, f1, d_acc, d_f1;
    for (size_t si = 0; si < n_seeds; ++si) {
      const CellResult& cell = cell_at(ci, si);
      if (cell.failed) {
        ++stats.failed_cells;
        continue;
      }
      acc.push_back(cell.metrics.accuracy);
      prec.push_back(cell.metrics.precision);
      rec.push_back(cell.metrics.recall);
      f1.push_back(cell.metrics.f1);
      if (cfg.level == AblationLevel::Baseline) continue;
      const CellResult& base = cell_at(0, si);
      if (base.failed) continue;
      if (base.metrics.accuracy > 0.0) {
        d_acc.push_back(percentage_decrease(base.metrics.accuracy,
                                            cell.metrics.accuracy));
      }
      if (base.metrics.f1 > 0.0) {
        d_f1.push_back(percentage_decrease(base.metrics.f1, cell.metrics.f1));
      }
    }
    const MeanStd a = mean_std(acc), p = mean_std(prec), r = mean_std(rec),
                  f = mean_std(f1);
    stats.accuracy_mean = a.mean;
    stats.accuracy_std = a.std;
    stats.precision_mean = p.mean;
    stats.precision_std = p.std;
    stats.recall_mean = r.mean;
    stats.recall_std = r.std;
    stats.f1_mean = f.mean;
    stats.f1_std = f.std;
    if (cfg.level != AblationLevel::Baseline) {
      stats.pct_dec_accuracy = mean_std(d_acc).mean;
      stats.pct_dec_f1 = mean_std(d_f1).mean;
    }
    results.configs.push_back(std::move(stats));
  }
  return results;
}

}  // namespace pkg
