#include "pkg/metrics.hpp"

#include <json.hpp>

#include "pkg/error.hpp"

namespace pkg {

Metrics metrics_from_counts(int64_t tp, int64_t fp, int64_t tn, int64_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const int64_t total = tp + fp + tn + fn;
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

Metrics compute_metrics(std::span<const double> predictions,
                        std::span<const int> labels, double threshold) {
  if (predictions.size() != labels.size()) {
    raise(ErrorCode::InvalidInput, "predictions and labels differ in length");
  }
  if (predictions.empty()) {
    raise(ErrorCode::InvalidInput, "cannot compute metrics over an empty set");
  }
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted = predictions[i] >= threshold;  // tie goes positive
    const bool actual = labels[i] != 0;
    if (predicted && actual) ++tp;
    else if (predicted && !actual) ++fp;
    else if (!predicted && !actual) ++tn;
    else ++fn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::json j{{"tp", m.tp},           {"fp", m.fp},
                   {"tn", m.tn},           {"fn", m.fn},
                   {"accuracy", m.accuracy}, {"precision", m.precision},
                   {"recall", m.recall},   {"f1", m.f1}};
  return j.dump();
}

Metrics metrics_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    Metrics m;
    m.tp = j.at("tp").get<int64_t>();
    m.fp = j.at("fp").get<int64_t>();
    m.tn = j.at("tn").get<int64_t>();
    m.fn = j.at("fn").get<int64_t>();
    m.accuracy = j.at("accuracy").get<double>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("metrics JSON: ") + e.what());
  }
}

}  // namespace pkg
