#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pkg/cohort.hpp"
#include "pkg/schema.hpp"

namespace pkg {

enum class CohortFormat { Csv, Jsonl };

/// Column order of the CSV contract; JSONL uses the same field names.
extern const std::vector<std::string> kCohortColumns;

CohortDataset parse_cohort(const std::string& path, CohortFormat format);
CohortDataset parse_cohort_text(const std::string& text, CohortFormat format);

std::string cohort_to_text(const CohortDataset& cohort, CohortFormat format);
void write_cohort(const CohortDataset& cohort, const std::string& path,
                  CohortFormat format);

/// Picks each patient's earliest ICU admission as the index admission and
/// labels it 1 iff any other admission of the same patient falls within
/// (0, window_days] of it. Patients without an ICU stay are dropped and
/// counted. Record order does not affect the outcome.
CohortDataset label_readmissions(std::vector<AdmissionRecord> records,
                                 int window_days = 30);

MissingnessReport assess_missingness(const CohortDataset& cohort,
                                     const Schema& schema);

/// Fills absent social facets from note text by longest-keyword match
/// (ties: earliest position, then lexicographic keyword). Structured
/// values are never overwritten; idempotent.
CohortDataset enrich_social(const CohortDataset& cohort,
                            const ConceptDictionary& dict);

/// Uniform sample of n index admissions without replacement; each sampled
/// patient keeps their full admission set. Deterministic given seed.
CohortDataset sample_cohort(const CohortDataset& cohort, size_t n,
                            uint64_t seed);

DatasetSummary summarize(const CohortDataset& cohort, const Schema& schema);

std::string summary_to_json(const DatasetSummary& summary,
                            const MissingnessReport& missingness);

}  // namespace pkg
