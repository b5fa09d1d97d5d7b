#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "pkg/error.hpp"
#include "pkg/graph.hpp"
#include "pkg/ingest.hpp"
#include "pkg/sage.hpp"
#include "pkg/schema.hpp"
#include "pkg/synth.hpp"
#include "test_util.hpp"

using namespace pkg;
using testutil::code_of;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

SyntheticFacet single_facet(std::string name, std::vector<std::string> values,
                            std::map<std::string, double> weights = {},
                            double missingness = 0.0) {
  SyntheticFacet f;
  f.name = std::move(name);
  f.arity = ValueArity::Single;
  f.values = std::move(values);
  f.weights = std::move(weights);
  f.missingness = missingness;
  return f;
}

SyntheticFacet multi_facet(std::string name, std::vector<std::string> pool,
                           int min_len, int max_len,
                           std::map<std::string, double> weights = {},
                           double missingness = 0.0) {
  SyntheticFacet f;
  f.name = std::move(name);
  f.arity = ValueArity::Multi;
  f.values = std::move(pool);
  f.min_len = min_len;
  f.max_len = max_len;
  f.weights = std::move(weights);
  f.missingness = missingness;
  return f;
}

SyntheticConfig base_config(int n, uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n_patients = n;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  SyntheticConfig cfg = base_config(10, 1);
  cfg.facets.push_back(single_facet("gender", {"F", "M"}));
  cfg.validate();  // baseline passes

  auto rejects = [&](auto&& tweak) {
    SyntheticConfig bad = cfg;
    tweak(bad);
    CHECK_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidInput);
  };
  rejects([](SyntheticConfig& c) { c.n_patients = 0; });
  rejects([](SyntheticConfig& c) { c.gap_min = 0; });
  rejects([](SyntheticConfig& c) { c.gap_max = 31; });
  rejects([](SyntheticConfig& c) { c.gap_min = 9, c.gap_max = 3; });
  rejects([](SyntheticConfig& c) { c.negative_followup_prob = 1.5; });
  rejects([](SyntheticConfig& c) {
    c.facets.push_back(single_facet("starsign", {"A"}));
  });
  rejects([](SyntheticConfig& c) {
    c.facets.push_back(single_facet("gender", {"X"}));
  });
  rejects([](SyntheticConfig& c) {
    c.facets.push_back(single_facet("disease", {"X"}));  // wrong arity
  });
  rejects([](SyntheticConfig& c) { c.facets[0].values.clear(); });
  rejects([](SyntheticConfig& c) { c.facets[0].values = {"F", "F"}; });
  rejects([](SyntheticConfig& c) { c.facets[0].missingness = 1.5; });
  rejects([](SyntheticConfig& c) { c.facets[0].weights = {{"Q", 1.0}}; });
  rejects([](SyntheticConfig& c) {
    c.facets.push_back(multi_facet("disease", {"A", "B"}, 1, 3));
  });
  rejects([](SyntheticConfig& c) {
    c.facets.push_back(multi_facet("disease", {"A", "B"}, -1, 1));
  });

  CHECK_EQ(cfg.find("gender"), &cfg.facets[0]);
  CHECK_EQ(cfg.find("race"), nullptr);
}

TEST_CASE("config json round trip") {
  SyntheticConfig cfg = base_config(40, 7);
  cfg.bias = -0.5;
  cfg.gap_min = 2;
  cfg.gap_max = 14;
  cfg.negative_followup_prob = 0.25;
  cfg.facets.push_back(single_facet("gender", {"F", "M"}, {{"F", 1.0}}));
  cfg.facets.push_back(
      multi_facet("disease", {"X0", "X1", "X2"}, 1, 2, {{"X1", 2.0}}, 0.1));
  CHECK_EQ(SyntheticConfig::from_json(cfg.to_json()), cfg);

  // facets come back in schema order no matter how the JSON listed them
  SyntheticConfig swapped = cfg;
  std::swap(swapped.facets[0], swapped.facets[1]);
  CHECK_EQ(SyntheticConfig::from_json(swapped.to_json()), cfg);

  // gap accepted both as a pair and as an object
  SyntheticConfig obj_gap = SyntheticConfig::from_json(
      R"({"n_patients": 5, "readmit_gap_days": {"min": 3, "max": 9}})");
  CHECK_EQ(obj_gap.gap_min, 3);
  CHECK_EQ(obj_gap.gap_max, 9);

  CHECK_EQ(code_of([] { SyntheticConfig::from_json("nope"); }),
           ErrorCode::Parse);
  CHECK_EQ(code_of([] { SyntheticConfig::from_json("{}"); }),
           ErrorCode::Parse);  // n_patients required
  CHECK_EQ(code_of([] {
             SyntheticConfig::from_json(
                 R"({"n_patients": 5, "facet_vocab": {"gender":
                     {"pool": ["F"], "min_len": 1, "max_len": 1}}})");
           }),
           ErrorCode::Parse);  // single facet with a pool object
  CHECK_EQ(code_of([] {
             SyntheticConfig::from_json(
                 R"({"n_patients": 5, "facet_vocab": {"disease": ["X"]}})");
           }),
           ErrorCode::Parse);  // multi facet with a plain array
  CHECK_EQ(code_of([] {
             SyntheticConfig::from_json(
                 R"({"n_patients": 5, "facet_vocab": {"starsign": ["A"]}})");
           }),
           ErrorCode::InvalidInput);
}

TEST_CASE("bayes accuracy closed forms") {
  SUBCASE("no facets") {
    SyntheticConfig cfg = base_config(10, 0);
    CHECK_EQ(bayes_accuracy(cfg), 0.5);
    cfg.bias = 1.2;
    CHECK_EQ(bayes_accuracy(cfg), doctest::Approx(logistic(1.2)).epsilon(1e-12));
    cfg.bias = -1.2;
    CHECK_EQ(bayes_accuracy(cfg), doctest::Approx(logistic(1.2)).epsilon(1e-12));
  }

  SUBCASE("one symmetric single facet") {
    SyntheticConfig cfg = base_config(10, 0);
    cfg.facets.push_back(
        single_facet("gender", {"F", "M"}, {{"F", 3.0}, {"M", -3.0}}));
    CHECK_EQ(bayes_accuracy(cfg), doctest::Approx(logistic(3.0)).epsilon(1e-12));
    cfg.facets[0].weights = {{"F", 2.0}, {"M", -2.0}};
    CHECK_EQ(bayes_accuracy(cfg), doctest::Approx(logistic(2.0)).epsilon(1e-12));
  }

  SUBCASE("one multi facet") {
    SyntheticConfig cfg = base_config(10, 0);
    cfg.facets.push_back(multi_facet("disease", {"X0", "X1"}, 1, 1, {{"X1", 2.0}}));
    const double expected = 0.25 + 0.5 * logistic(2.0);
    CHECK_EQ(bayes_accuracy(cfg), doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("zero-weight facets do not move the oracle") {
    SyntheticConfig cfg = base_config(10, 0);
    cfg.facets.push_back(
        single_facet("gender", {"F", "M"}, {{"F", 2.0}, {"M", -2.0}}));
    const double without = bayes_accuracy(cfg);
    cfg.facets.push_back(single_facet("race", {"A", "B", "C", "D"}));
    cfg.facets.push_back(multi_facet("medication", {"M0", "M1", "M2"}, 1, 2));
    CHECK_EQ(bayes_accuracy(cfg), doctest::Approx(without).epsilon(1e-12));
  }
}

TEST_CASE("combination counting and the oracle guard") {
  SyntheticConfig cfg = base_config(10, 0);
  cfg.facets.push_back(single_facet("gender", {"F", "M"}));
  CHECK_EQ(combination_count(cfg), 2.0);
  cfg.facets.push_back(single_facet("race", {"A", "B", "C", "D"}));
  CHECK_EQ(combination_count(cfg), 8.0);
  cfg.facets.push_back(multi_facet("disease", {"D0", "D1", "D2"}, 1, 2));
  CHECK_EQ(combination_count(cfg), 48.0);  // 8 * (3 choose 1 + 3 choose 2)

  SyntheticConfig huge = base_config(10, 0);
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back("C" + std::to_string(i));
  huge.facets.push_back(multi_facet("disease", pool, 1, 30));
  CHECK(combination_count(huge) > 1e6);
  CHECK_THROWS_WITH_AS(bayes_accuracy(huge), doctest::Contains("limit is 1e6"),
                       Error);
}

TEST_CASE("generated cohorts honor the admission contract") {
  SyntheticConfig cfg = base_config(500, 20240817);
  cfg.gap_min = 3;
  cfg.gap_max = 9;
  cfg.facets.push_back(
      single_facet("gender", {"F", "M"}, {{"F", 1.0}, {"M", -1.0}}));
  cfg.facets.push_back(multi_facet("disease", {"C", "A", "B"}, 2, 3));
  CohortDataset cohort = generate_cohort(cfg);

  CHECK(cohort.labeled);
  CHECK_EQ(cohort.patient_ids().size(), 500);
  CHECK_EQ(cohort.index_admissions.size(), 500);
  CHECK_EQ(cohort.labels.size(), 500);
  CHECK_EQ(cohort.n_patients_without_icu, 0);

  size_t with_followup = 0;
  for (int i = 0; i < cfg.n_patients; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%06d", i);
    const std::string pid = buf;
    const AdmissionRecord* index = cohort.find_admission(pid + "-A0");
    REQUIRE_NE(index, nullptr);
    CHECK(index->icu_stay);
    CHECK(cohort.index_admissions.contains(index->admission_id));
    CHECK(index->admit_time >= 0);
    CHECK(index->admit_time <= 3650);
    const auto& codes = index->code_list("disease");
    CHECK(codes.size() >= 2);
    CHECK(codes.size() <= 3);
    CHECK(std::is_sorted(codes.begin(), codes.end()));

    const int label = cohort.labels.at(pid + "-A0");
    const AdmissionRecord* followup = cohort.find_admission(pid + "-A1");
    if (label == 1) {
      REQUIRE_NE(followup, nullptr);
      const int64_t gap = followup->admit_time - index->admit_time;
      CHECK(gap >= 3);
      CHECK(gap <= 9);
    } else if (followup != nullptr) {
      const int64_t gap = followup->admit_time - index->admit_time;
      CHECK(gap >= 31);
      CHECK(gap <= 365);
    }
    if (followup != nullptr) {
      ++with_followup;
      CHECK_FALSE(followup->icu_stay);
      CHECK_EQ(followup->attrs, index->attrs);
      CHECK_EQ(followup->codes, index->codes);
      CHECK_FALSE(cohort.labels.contains(followup->admission_id));
    }
  }
  CHECK_EQ(cohort.records.size(), 500 + with_followup);
}

TEST_CASE("follow-up extremes") {
  SyntheticConfig cfg = base_config(200, 5);
  cfg.facets.push_back(
      single_facet("gender", {"F", "M"}, {{"F", 1.0}, {"M", -1.0}}));

  cfg.negative_followup_prob = 1.0;
  CHECK_EQ(generate_cohort(cfg).records.size(), 400);

  cfg.negative_followup_prob = 0.0;
  CohortDataset sparse = generate_cohort(cfg);
  size_t positives = 0;
  for (const auto& [id, label] : sparse.labels) positives += label;
  CHECK_EQ(sparse.records.size(), 200 + positives);
}

TEST_CASE("generation statistics track the generative model") {
  SyntheticConfig cfg = base_config(10000, 99);
  cfg.facets.push_back(
      single_facet("gender", {"F", "M"}, {{"F", 3.0}, {"M", -3.0}}));
  cfg.facets.push_back(single_facet("race", {"A", "B", "C", "D"}, {}, 0.3));
  cfg.facets.push_back(multi_facet("disease", {"X0", "X1"}, 1, 1, {}, 0.4));
  CohortDataset cohort = generate_cohort(cfg);

  size_t pos = 0, f_total = 0, f_pos = 0, m_total = 0, m_pos = 0;
  for (const auto& id : cohort.index_admissions) {
    const AdmissionRecord* r = cohort.find_admission(id);
    const int label = cohort.labels.at(id);
    pos += label;
    if (r->attr("gender") == "F") {
      ++f_total;
      f_pos += label;
    } else {
      ++m_total;
      m_pos += label;
    }
  }
  // overall rate is 1/2 by symmetry; groups sit at sigmoid(+-3)
  CHECK_EQ(static_cast<double>(pos) / 10000.0,
           doctest::Approx(0.5).epsilon(0.03));
  CHECK_EQ(static_cast<double>(f_pos) / static_cast<double>(f_total),
           doctest::Approx(logistic(3.0)).epsilon(0.03));
  CHECK_EQ(static_cast<double>(m_pos) / static_cast<double>(m_total),
           doctest::Approx(logistic(-3.0)).epsilon(0.5));
  CHECK(static_cast<double>(m_pos) / static_cast<double>(m_total) < 0.08);

  MissingnessReport miss =
      assess_missingness(cohort, default_schema(GraphVersion::V1));
  CHECK_EQ(miss.n_records, 10000);
  CHECK_EQ(miss.per_facet.at("gender"), 0.0);
  CHECK_EQ(miss.per_facet.at("race"), doctest::Approx(0.3).epsilon(0.06));
  CHECK_EQ(miss.per_facet.at("disease"), doctest::Approx(0.4).epsilon(0.05));
  CHECK_EQ(miss.per_facet.at("housing"), 1.0);  // never generated
}

TEST_CASE("generation is deterministic and survives csv round trips") {
  SyntheticConfig cfg = base_config(120, 31415);
  cfg.facets.push_back(
      single_facet("gender", {"F", "M"}, {{"F", 2.0}, {"M", -2.0}}));
  cfg.facets.push_back(multi_facet("disease", {"X0", "X1", "X2"}, 1, 2));

  CohortDataset a = generate_cohort(cfg);
  CohortDataset b = generate_cohort(cfg);
  const std::string csv = cohort_to_text(a, CohortFormat::Csv);
  CHECK_EQ(csv, cohort_to_text(b, CohortFormat::Csv));

  SyntheticConfig other = cfg;
  other.seed = 31416;
  CHECK_NE(cohort_to_text(generate_cohort(other), CohortFormat::Csv), csv);

  CohortDataset parsed = parse_cohort_text(csv, CohortFormat::Csv);
  CHECK_EQ(parsed.records.size(), a.records.size());
  CHECK_EQ(label_readmissions(parsed.records).labels, a.labels);
}

TEST_CASE("a strong synthetic signal is learnable") {
  SyntheticConfig cfg = base_config(300, 8);
  cfg.facets.push_back(
      single_facet("gender", {"F", "M"}, {{"F", 3.0}, {"M", -3.0}}));
  cfg.facets.push_back(single_facet("race", {"A", "B", "C", "D"}));
  CohortDataset cohort = generate_cohort(cfg);

  Schema schema = default_schema(GraphVersion::V3);
  std::vector<PatientGraph> graphs = build_graphs(cohort, schema);
  CHECK_EQ(graphs.size(), 300);

  TrainConfig tc;
  tc.epochs = 8;
  tc.lr = 0.03;
  tc.d_embed = 8;
  tc.d_hidden = 8;
  tc.seed = 5;
  TrainResult result = train(graphs, tc);
  CHECK(result.test.accuracy > 0.75);
  CHECK(result.test.accuracy <= bayes_accuracy(cfg) + 0.1);
}
