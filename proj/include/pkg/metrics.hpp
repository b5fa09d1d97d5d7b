#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace pkg {

/// Confusion counts plus the derived fractions. Zero denominators give
/// precision/recall/f1 = 0.
struct Metrics {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;

  bool operator==(const Metrics&) const = default;
};

/// Binarizes at probability >= threshold and fills all fields.
/// Mismatched or empty inputs raise InvalidInput.
Metrics compute_metrics(std::span<const double> predictions,
                        std::span<const int> labels, double threshold);

/// Derived fields from already-filled counts.
Metrics metrics_from_counts(int64_t tp, int64_t fp, int64_t tn, int64_t fn);

std::string metrics_to_json(const Metrics& m);
Metrics metrics_from_json_string(const std::string& text);

}  // namespace pkg
