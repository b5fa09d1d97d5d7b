#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pkg {

/// One hospital admission row. Single-valued facets live in attrs,
/// multi-valued code lists in codes, both keyed by facet name.
struct AdmissionRecord {
  std::string patient_id;
  std::string admission_id;
  int64_t admit_time = 0;  // days since epoch
  bool icu_stay = false;
  std::map<std::string, std::string> attrs;
  std::map<std::string, std::vector<std::string>> codes;
  std::optional<std::string> note_text;

  std::optional<std::string> attr(const std::string& facet) const {
    auto it = attrs.find(facet);
    if (it == attrs.end()) return std::nullopt;
    return it->second;
  }
  const std::vector<std::string>& code_list(const std::string& facet) const;
};

struct CohortDataset {
  std::vector<AdmissionRecord> records;
  /// admission_id -> {0,1}; index admissions only.
  std::map<std::string, int> labels;
  std::set<std::string> index_admissions;
  size_t n_patients_without_icu = 0;
  bool labeled = false;

  const AdmissionRecord* find_admission(const std::string& admission_id) const;
  std::set<std::string> patient_ids() const;
};

struct MissingnessReport {
  std::map<std::string, double> per_facet;  // fraction missing in [0,1]
  size_t n_records = 0;                     // index admissions counted
};

struct DatasetSummary {
  size_t n_patients = 0;
  size_t n_index_admissions = 0;
  double positive_rate = 0.0;
  std::map<std::string, size_t> vocab_sizes;
  std::map<std::string, double> age_distribution;
};

/// keyword -> (social facet, category value); keywords stored lowercase.
struct ConceptDictionary {
  struct Target {
    std::string facet;
    std::string value;
  };
  std::map<std::string, Target> entries;

  static ConceptDictionary from_json(const std::string& text);
};

/// Uppercase, trim, drop empties, dedupe keeping first occurrence.
std::vector<std::string> normalize_codes(const std::vector<std::string>& raw);
std::string normalize_code(const std::string& raw);

}  // namespace pkg
