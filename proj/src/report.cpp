#include "pkg/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "pkg/error.hpp"
#include "pkg/io_util.hpp"

namespace pkg {

namespace {

// shortest representation that parses back to the same double
std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

nlohmann::json metrics_json_obj(const Metrics& m) {
  return {{"tp", m.tp},           {"fp", m.fp},
          {"tn", m.tn},           {"fn", m.fn},
          {"accuracy", m.accuracy}, {"precision", m.precision},
          {"recall", m.recall},   {"f1", m.f1}};
}

Metrics metrics_json_parse(const nlohmann::json& j) {
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
}

}  // namespace

FacetRanking rank_facets(const AblationResults& results) {
  FacetRanking ranking;
  for (const auto& cfg : results.configs) {
    if (cfg.level == AblationLevel::Baseline) continue;
    ranking.entries.push_back({cfg.name, cfg.pct_dec_accuracy, cfg.pct_dec_f1});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankingEntry& a, const RankingEntry& b) {
              if (a.pct_dec_accuracy != b.pct_dec_accuracy) {
                return a.pct_dec_accuracy > b.pct_dec_accuracy;
              }
              if (a.pct_dec_f1 != b.pct_dec_f1) return a.pct_dec_f1 > b.pct_dec_f1;
              return a.name < b.name;
            });
  return ranking;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  raise(ErrorCode::InvalidArgument, "unknown report format '" + s + "'");
}

std::string results_to_json(const AblationResults& results) {
  nlohmann::json doc;
  doc["seeds"] = results.seeds;
  doc["configs"] = nlohmann::json::array();
  for (const auto& c : results.configs) {
    doc["configs"].push_back({{"name", c.name},
                              {"level", to_string(c.level)},
                              {"accuracy_mean", c.accuracy_mean},
                              {"accuracy_std", c.accuracy_std},
                              {"precision_mean", c.precision_mean},
                              {"precision_std", c.precision_std},
                              {"recall_mean", c.recall_mean},
                              {"recall_std", c.recall_std},
                              {"f1_mean", c.f1_mean},
                              {"f1_std", c.f1_std},
                              {"pct_dec_accuracy", c.pct_dec_accuracy},
                              {"pct_dec_f1", c.pct_dec_f1},
                              {"n_seeds", c.n_seeds},
                              {"failed_cells", c.failed_cells}});
  }
  doc["cells"] = nlohmann::json::array();
  for (const auto& cell : results.cells) {
    doc["cells"].push_back({{"config", cell.config},
                            {"seed", cell.seed},
                            {"metrics", metrics_json_obj(cell.metrics)},
                            {"failed", cell.failed},
                            {"error", cell.error}});
  }
  return doc.dump(2);
}

AblationResults results_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("results JSON: ") + e.what());
  }
  AblationResults results;
  try {
    results.seeds = doc.at("seeds").get<std::vector<uint64_t>>();
    for (const auto& j : doc.at("configs")) {
      ConfigStats c;
      c.name = j.at("name").get<std::string>();
      c.level = ablation_level_from_string(j.at("level").get<std::string>());
      c.accuracy_mean = j.at("accuracy_mean").get<double>();
      c.accuracy_std = j.at("accuracy_std").get<double>();
      c.precision_mean = j.at("precision_mean").get<double>();
      c.precision_std = j.at("precision_std").get<double>();
      c.recall_mean = j.at("recall_mean").get<double>();
      c.recall_std = j.at("recall_std").get<double>();
      c.f1_mean = j.at("f1_mean").get<double>();
      c.f1_std = j.at("f1_std").get<double>();
      c.pct_dec_accuracy = j.at("pct_dec_accuracy").get<double>();
      c.pct_dec_f1 = j.at("pct_dec_f1").get<double>();
      c.n_seeds = j.at("n_seeds").get<int>();
      c.failed_cells = j.at("failed_cells").get<int>();
      results.configs.push_back(std::move(c));
    }
    for (const auto& j : doc.at("cells")) {
      CellResult cell;
      cell.config = j.at("config").get<std::string>();
      cell.seed = j.at("seed").get<uint64_t>();
      cell.metrics = metrics_json_parse(j.at("metrics"));
      cell.failed = j.at("failed").get<bool>();
      cell.error = j.at("error").get<std::string>();
      results.cells.push_back(std::move(cell));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("results JSON field: ") + e.what());
  }
  return results;
}

std::string render_report(const AblationResults& results,
                          const FacetRanking& ranking, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return results_to_json(results);
    case ReportFormat::Csv: {
      std::ostringstream out;
      out << "config,level,accuracy_mean,accuracy_std,f1_mean,f1_std,"
             "pct_dec_accuracy,pct_dec_f1,n_seeds,failed_cells\n";
      for (const auto& c : results.configs) {
        out << c.name << ',' << to_string(c.level) << ','
            << fmt_double(c.accuracy_mean) << ',' << fmt_double(c.accuracy_std)
            << ',' << fmt_double(c.f1_mean) << ',' << fmt_double(c.f1_std)
            << ',' << fmt_double(c.pct_dec_accuracy) << ','
            << fmt_double(c.pct_dec_f1) << ',' << c.n_seeds << ','
            << c.failed_cells << '\n';
      }
      return out.str();
    }
    case ReportFormat::Markdown: {
      std::ostringstream out;
      out << "# Ablation ranking\n\n";
      out << "Relative percentage decrease versus baseline, averaged over "
          << results.seeds.size() << " seed(s).\n\n";
      out << "| rank | config | pct_dec_accuracy | pct_dec_f1 |\n";
      out << "| ---: | --- | ---: | ---: |\n";
      int rank = 1;
      for (const auto& e : ranking.entries) {
        out << "| " << rank++ << " | " << e.name << " | "
            << fmt_fixed4(e.pct_dec_accuracy) << " | " << fmt_fixed4(e.pct_dec_f1)
            << " |\n";
      }
      return out.str();
    }
  }
  raise(ErrorCode::InvalidArgument, "unknown report format");
}

void write_report(const AblationResults& results, const FacetRanking& ranking,
                  const std::string& path, ReportFormat format) {
  write_file(path, render_report(results, ranking, format));
}

}  // namespace pkg
