#include "pkg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <span>

#include <json.hpp>

#include "pkg/error.hpp"
#include "pkg/ingest.hpp"
#include "pkg/numeric.hpp"
#include "pkg/rng.hpp"

namespace pkg {

namespace {

constexpr double kMaxCombinations = 1e6;

const Schema& reference_schema() {
  static const Schema schema = default_schema(GraphVersion::V1);
  return schema;
}

std::string patient_id_for(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "P%06d", i);
  return buf;
}

double facet_weight(const SyntheticFacet& facet, const std::string& value) {
  auto it = facet.weights.find(value);
  return it == facet.weights.end() ? 0.0 : it->second;
}

// first `len` entries of a partial Fisher-Yates over the pool indices
std::vector<int> sample_distinct(int pool_size, int len, Rng& rng) {
  std::vector<int> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < len; ++j) {
    const int k = j + static_cast<int>(rng.below(pool_size - j));
    std::swap(idx[j], idx[k]);
  }
  idx.resize(len);
  return idx;
}

// per-facet enumeration entry: total weight of the drawn values + its prob
struct Outcome {
  double weight = 0.0;
  double prob = 1.0;
};

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double facet_outcome_count(const SyntheticFacet& f) {
  if (f.arity == ValueArity::Single) return static_cast<double>(f.values.size());
  double total = 0.0;
  for (int len = f.min_len; len <= f.max_len; ++len) {
    total += binomial(static_cast<int>(f.values.size()), len);
    if (total > kMaxCombinations) return total;
  }
  return total;
}

std::vector<Outcome> facet_outcomes(const SyntheticFacet& f) {
  std::vector<Outcome> out;
  if (f.arity == ValueArity::Single) {
    const double p = 1.0 / static_cast<double>(f.values.size());
    for (const auto& v : f.values) out.push_back({facet_weight(f, v), p});
    return out;
  }
  const int k = static_cast<int>(f.values.size());
  const double p_len = 1.0 / static_cast<double>(f.max_len - f.min_len + 1);
  for (int len = f.min_len; len <= f.max_len; ++len) {
    const double p = p_len / binomial(k, len);
    // enumerate size-len index subsets in lexicographic order
    std::vector<int> comb(len);
    std::iota(comb.begin(), comb.end(), 0);
    for (;;) {
      double w = 0.0;
      for (int i : comb) w += facet_weight(f, f.values[i]);
      out.push_back({w, p});
      int pos = len - 1;
      while (pos >= 0 && comb[pos] == k - len + pos) --pos;
      if (pos < 0) break;
      ++comb[pos];
      for (int i = pos + 1; i < len; ++i) comb[i] = comb[i - 1] + 1;
    }
  }
  return out;
}

// recursive halving keeps the reduction tree independent of how equal-score
// outcomes were interleaved, which the zero-weight-deletion property needs
double pairwise_sum(std::span<const double> xs) {
  if (xs.size() == 1) return xs[0];
  if (xs.empty()) return 0.0;
  const size_t half = xs.size() / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_patients < 1) raise(ErrorCode::InvalidInput, "n_patients must be >= 1");
  if (gap_min < 1 || gap_max < gap_min || gap_max > 30) {
    raise(ErrorCode::InvalidInput,
          "readmit gap must satisfy 1 <= min <= max <= 30");
  }
  if (negative_followup_prob < 0.0 || negative_followup_prob > 1.0) {
    raise(ErrorCode::InvalidInput, "negative_followup_prob must be in [0,1]");
  }
  const Schema& schema = reference_schema();
  std::set<std::string> seen;
  for (const auto& f : facets) {
    const Facet* ref = schema.find(f.name);
    if (ref == nullptr) {
      raise(ErrorCode::InvalidInput, "unknown facet '" + f.name + "'");
    }
    if (!seen.insert(f.name).second) {
      raise(ErrorCode::InvalidInput, "facet '" + f.name + "' listed twice");
    }
    if (f.arity != ref->arity) {
      raise(ErrorCode::InvalidInput,
            "facet '" + f.name + "' has the wrong arity for the schema");
    }
    if (f.values.empty()) {
      raise(ErrorCode::InvalidInput, "facet '" + f.name + "' has no values");
    }
    if (std::set<std::string>(f.values.begin(), f.values.end()).size() !=
        f.values.size()) {
      raise(ErrorCode::InvalidInput,
            "facet '" + f.name + "' has duplicate values");
    }
    if (f.missingness < 0.0 || f.missingness > 1.0) {
      raise(ErrorCode::InvalidInput,
            "facet '" + f.name + "' missingness outside [0,1]");
    }
    if (f.arity == ValueArity::Multi) {
      if (f.min_len < 0 || f.max_len < f.min_len ||
          f.max_len > static_cast<int>(f.values.size())) {
        raise(ErrorCode::InvalidInput,
              "facet '" + f.name + "' needs 0 <= min_len <= max_len <= pool");
      }
    }
    for (const auto& [value, weight] : f.weights) {
      (void)weight;
      if (std::find(f.values.begin(), f.values.end(), value) ==
          f.values.end()) {
        raise(ErrorCode::InvalidInput, "facet '" + f.name +
                                           "' has a weight for unknown value '" +
                                           value + "'");
      }
    }
  }
}

const SyntheticFacet* SyntheticConfig::find(const std::string& name) const {
  for (const auto& f : facets) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::string SyntheticConfig::to_json() const {
  nlohmann::json doc;
  doc["n_patients"] = n_patients;
  doc["seed"] = seed;
  doc["bias"] = bias;
  doc["readmit_gap_days"] = {gap_min, gap_max};
  doc["negative_followup_prob"] = negative_followup_prob;
  nlohmann::json vocab = nlohmann::json::object();
  nlohmann::json weights = nlohmann::json::object();
  nlohmann::json missing = nlohmann::json::object();
  for (const auto& f : facets) {
    if (f.arity == ValueArity::Single) {
      vocab[f.name] = f.values;
    } else {
      vocab[f.name] = {{"pool", f.values},
                       {"min_len", f.min_len},
                       {"max_len", f.max_len}};
    }
    if (!f.weights.empty()) weights[f.name] = f.weights;
    if (f.missingness > 0.0) missing[f.name] = f.missingness;
  }
  doc["facet_vocab"] = std::move(vocab);
  doc["signal_weights"] = std::move(weights);
  doc["missingness"] = std::move(missing);
  return doc.dump(2);
}

SyntheticConfig SyntheticConfig::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("synthetic config JSON: ") + e.what());
  }
  SyntheticConfig cfg;
  try {
    cfg.n_patients = doc.at("n_patients").get<int>();
    cfg.seed = doc.value("seed", uint64_t{0});
    cfg.bias = doc.value("bias", 0.0);
    if (doc.contains("readmit_gap_days")) {
      const auto& gap = doc["readmit_gap_days"];
      if (gap.is_array() && gap.size() == 2) {
        cfg.gap_min = gap[0].get<int>();
        cfg.gap_max = gap[1].get<int>();
      } else if (gap.is_object()) {
        cfg.gap_min = gap.at("min").get<int>();
        cfg.gap_max = gap.at("max").get<int>();
      } else {
        raise(ErrorCode::Parse, "readmit_gap_days must be [min, max]");
      }
    }
    cfg.negative_followup_prob = doc.value("negative_followup_prob", 0.5);

    const Schema& schema = reference_schema();
    const auto vocab = doc.value("facet_vocab", nlohmann::json::object());
    const auto weights = doc.value("signal_weights", nlohmann::json::object());
    const auto missing = doc.value("missingness", nlohmann::json::object());
    // schema order regardless of JSON key order, for deterministic draws
    for (const auto& ref : schema.facets()) {
      if (!vocab.contains(ref.name)) continue;
      SyntheticFacet f;
      f.name = ref.name;
      f.arity = ref.arity;
      const auto& spec = vocab[ref.name];
      if (spec.is_array()) {
        if (ref.arity != ValueArity::Single) {
          raise(ErrorCode::Parse, "facet '" + ref.name +
                                      "' is multi-valued; use a pool object");
        }
        f.values = spec.get<std::vector<std::string>>();
      } else if (spec.is_object()) {
        if (ref.arity != ValueArity::Multi) {
          raise(ErrorCode::Parse, "facet '" + ref.name +
                                      "' is single-valued; use a plain array");
        }
        f.values = spec.at("pool").get<std::vector<std::string>>();
        f.min_len = spec.value("min_len", 1);
        f.max_len = spec.value("max_len", 1);
      } else {
        raise(ErrorCode::Parse, "facet_vocab entries are arrays or objects");
      }
      if (weights.contains(ref.name)) {
        f.weights = weights[ref.name].get<std::map<std::string, double>>();
      }
      if (missing.contains(ref.name)) {
        f.missingness = missing[ref.name].get<double>();
      }
      cfg.facets.push_back(std::move(f));
    }
    for (const auto& [name, unused] : vocab.items()) {
      (void)unused;
      if (!schema.has(name)) {
        raise(ErrorCode::InvalidInput, "unknown facet '" + name + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("synthetic config field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

CohortDataset generate_cohort(const SyntheticConfig& cfg) {
  cfg.validate();
  const Schema& schema = reference_schema();

  // config facets in schema order; the draw sequence below is part of the
  // determinism contract
  std::vector<const SyntheticFacet*> ordered;
  for (const auto& ref : schema.facets()) {
    if (const SyntheticFacet* f = cfg.find(ref.name)) ordered.push_back(f);
  }

  std::vector<AdmissionRecord> records;
  records.reserve(static_cast<size_t>(cfg.n_patients) * 2);
  for (int i = 0; i < cfg.n_patients; ++i) {
    Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(i)));
    AdmissionRecord index;
    index.patient_id = patient_id_for(i);
    index.admission_id = index.patient_id + "-A0";
    index.admit_time = static_cast<int64_t>(rng.range(0, 3650));
    index.icu_stay = true;

    double score = cfg.bias;
    for (const SyntheticFacet* f : ordered) {
      if (f->arity == ValueArity::Single) {
        const std::string& v = f->values[rng.below(f->values.size())];
        index.attrs[f->name] = v;
        score += facet_weight(*f, v);
      } else {
        const int len = static_cast<int>(rng.range(f->min_len, f->max_len));
        auto picks =
            sample_distinct(static_cast<int>(f->values.size()), len, rng);
        std::vector<std::string> codes;
        codes.reserve(picks.size());
        for (int p : picks) codes.push_back(f->values[p]);
        std::sort(codes.begin(), codes.end());
        for (const auto& c : codes) score += facet_weight(*f, c);
        if (!codes.empty()) index.codes[f->name] = std::move(codes);
      }
    }
    const bool positive = rng.bernoulli(sigmoid(score));

    bool followup = positive;
    int64_t followup_day = 0;
    if (positive) {
      followup_day =
          index.admit_time + static_cast<int64_t>(rng.range(cfg.gap_min, cfg.gap_max));
    } else if (rng.bernoulli(cfg.negative_followup_prob)) {
      followup = true;
      followup_day = index.admit_time + static_cast<int64_t>(rng.range(31, 365));
    }

    // hide values only after the outcome has been realized
    for (const SyntheticFacet* f : ordered) {
      if (f->missingness <= 0.0) continue;
      if (!rng.bernoulli(f->missingness)) continue;
      if (f->arity == ValueArity::Single) index.attrs.erase(f->name);
      else index.codes.erase(f->name);
    }

    if (followup) {
      AdmissionRecord second;
      second.patient_id = index.patient_id;
      second.admission_id = index.patient_id + "-A1";
      second.admit_time = followup_day;
      second.icu_stay = false;
      second.attrs = index.attrs;
      second.codes = index.codes;
      records.push_back(index);
      records.push_back(std::move(second));
    } else {
      records.push_back(index);
    }
  }
  return label_readmissions(std::move(records), 30);
}

double combination_count(const SyntheticConfig& cfg) {
  cfg.validate();
  double total = 1.0;
  for (const auto& f : cfg.facets) {
    total *= facet_outcome_count(f);
    if (total > kMaxCombinations) return total;
  }
  return total;
}

double bayes_accuracy(const SyntheticConfig& cfg) {
  const double n_combos = combination_count(cfg);
  if (n_combos > kMaxCombinations) {
    raise(ErrorCode::OracleTooLarge,
          "combination space has " + std::to_string(n_combos) +
              " entries; limit is 1e6");
  }

  std::vector<Outcome> combos = {{cfg.bias, 1.0}};
  for (const auto& f : cfg.facets) {
    const auto outcomes = facet_outcomes(f);
    std::vector<Outcome> next;
    next.reserve(combos.size() * outcomes.size());
    for (const auto& c : combos) {
      for (const auto& o : outcomes) {
        next.push_back({c.weight + o.weight, c.prob * o.prob});
      }
    }
    combos = std::move(next);
  }

  std::vector<double> contributions;
  contributions.reserve(combos.size());
  for (const auto& c : combos) {
    const double p = sigmoid(c.weight);
    contributions.push_back(c.prob * (p >= 0.5 ? p : 1.0 - p));
  }
  return pairwise_sum(contributions);
}

}  // namespace pkg
