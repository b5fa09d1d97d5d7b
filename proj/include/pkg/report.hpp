#pragma once

#include <string>
#include <vector>

#include "pkg/ablation.hpp"

namespace pkg {

struct RankingEntry {
  std::string name;
  double pct_dec_accuracy = 0.0;
  double pct_dec_f1 = 0.0;

  bool operator==(const RankingEntry&) const = default;
};

/// Non-baseline configs sorted by impact: descending pct_dec_accuracy,
/// ties broken by descending pct_dec_f1, then name.
struct FacetRanking {
  std::vector<RankingEntry> entries;

  bool operator==(const FacetRanking&) const = default;
};

FacetRanking rank_facets(const AblationResults& results);

enum class ReportFormat { Csv, Json, Markdown };

ReportFormat report_format_from_string(const std::string& s);

/// Full-precision JSON dump of AblationResults; round-trips losslessly.
std::string results_to_json(const AblationResults& results);
AblationResults results_from_json(const std::string& text);

std::string render_report(const AblationResults& results,
                          const FacetRanking& ranking, ReportFormat format);

void write_report(const AblationResults& results, const FacetRanking& ranking,
                  const std::string& path, ReportFormat format);

}  // namespace pkg
