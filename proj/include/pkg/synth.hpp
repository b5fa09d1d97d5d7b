#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pkg/cohort.hpp"
#include "pkg/schema.hpp"

namespace pkg {

/// Generation recipe for one facet. Single facets draw one value uniformly
/// from `values`; multi facets draw a uniform length in [min_len, max_len]
/// and then that many distinct codes from `values` (the pool).
struct SyntheticFacet {
  std::string name;
  ValueArity arity = ValueArity::Single;
  std::vector<std::string> values;
  int min_len = 1, max_len = 1;
  std::map<std::string, double> weights;  // absent value -> weight 0
  double missingness = 0.0;

  bool operator==(const SyntheticFacet&) const = default;
};

/// Logistic generative model over the default schema's facets:
/// p(readmit) = sigmoid(bias + sum of weights of the sampled values).
/// Facets not listed are simply never generated (100% missing).
struct SyntheticConfig {
  int n_patients = 0;
  uint64_t seed = 0;
  double bias = 0.0;
  int gap_min = 1, gap_max = 30;          // readmission gap for positives
  double negative_followup_prob = 0.5;    // negatives with a > 30 day visit
  std::vector<SyntheticFacet> facets;

  void validate() const;
  const SyntheticFacet* find(const std::string& name) const;
  std::string to_json() const;
  static SyntheticConfig from_json(const std::string& text);
  bool operator==(const SyntheticConfig&) const = default;
};

/// Deterministic given cfg.seed (per-patient substreams). Labels are
/// realized by actual admission timing and recomputed with
/// label_readmissions, then missingness deletes values after the fact.
CohortDataset generate_cohort(const SyntheticConfig& cfg);

/// Expected accuracy of the Bayes-optimal classifier that observes every
/// generated attribute (missingness is not applied; this is the upper
/// bound). Enumerates the combination space; more than 1e6 combinations
/// raises OracleTooLarge.
double bayes_accuracy(const SyntheticConfig& cfg);

/// Number of attribute combinations bayes_accuracy would enumerate.
double combination_count(const SyntheticConfig& cfg);

}  // namespace pkg
