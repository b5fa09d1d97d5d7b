#include "pkg/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pkg/error.hpp"
#include "pkg/io_util.hpp"
#include "pkg/rng.hpp"

namespace pkg {

const std::vector<std::string> kCohortColumns = {
    "patient_id",     "admission_id",     "admit_time",      "icu_stay",
    "age_group",      "gender",           "religion",        "marital_status",
    "race",           "employment",       "household",       "housing",
    "disease_codes",  "medication_codes", "procedure_codes", "note_text"};

namespace {

// facet name -> CSV column for the single-valued facets
const std::vector<std::pair<std::string, std::string>> kSingleFacetColumns = {
    {"age_group", "age_group"},     {"gender", "gender"},
    {"religion", "religion"},       {"marital_status", "marital_status"},
    {"race", "race"},               {"employment", "employment"},
    {"household", "household"},     {"housing", "housing"}};

const std::vector<std::pair<std::string, std::string>> kMultiFacetColumns = {
    {"disease", "disease_codes"},
    {"medication", "medication_codes"},
    {"procedure", "procedure_codes"}};

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// RFC-4180 style line split with quoted fields; returns false at end of input.
bool next_csv_row(const std::string& text, size_t& pos,
                  std::vector<std::string>& fields, size_t& line_no) {
  fields.clear();
  if (pos >= text.size()) return false;
  ++line_no;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
        } else {
          quoted = false;
          ++pos;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
        ++pos;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
      ++pos;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      fields.push_back(field);
      return true;
    } else {
      field.push_back(c);
      ++pos;
    }
  }
  fields.push_back(field);
  return true;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_escape(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

[[noreturn]] void parse_fail(size_t line, const std::string& what) {
  std::ostringstream os;
  os << "line " << line << ": " << what;
  raise(ErrorCode::Parse, os.str());
}

std::string join_codes(const std::vector<std::string>& codes) {
  std::string out;
  for (size_t i = 0; i < codes.size(); ++i) {
    if (i) out.push_back('|');
    out += codes[i];
  }
  return out;
}

std::vector<std::string> split_codes(const std::string& cell) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : cell) {
    if (c == '|') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return normalize_codes(parts);
}

void check_unique_admission(
    const AdmissionRecord& rec, size_t line,
    std::map<std::string, std::string>& admission_owner) {
  auto [it, inserted] = admission_owner.emplace(rec.admission_id, rec.patient_id);
  if (!inserted) {
    std::ostringstream os;
    os << "line " << line << ": duplicate admission_id " << rec.admission_id;
    if (it->second != rec.patient_id) os << " (reused across patients)";
    raise(ErrorCode::DuplicateAdmission, os.str());
  }
}

CohortDataset parse_csv(const std::string& text) {
  CohortDataset cohort;
  size_t pos = 0, line_no = 0;
  std::vector<std::string> fields;
  if (!next_csv_row(text, pos, fields, line_no)) {
    raise(ErrorCode::Parse, "empty cohort file, header required");
  }
  if (fields != kCohortColumns) {
    parse_fail(line_no, "header does not match the cohort column contract");
  }
  std::map<std::string, std::string> admission_owner;
  while (next_csv_row(text, pos, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing newline
    if (fields.size() != kCohortColumns.size()) {
      parse_fail(line_no, "expected " + std::to_string(kCohortColumns.size()) +
                              " fields, got " + std::to_string(fields.size()));
    }
    AdmissionRecord rec;
    rec.patient_id = trim(fields[0]);
    rec.admission_id = trim(fields[1]);
    if (rec.patient_id.empty()) parse_fail(line_no, "empty patient_id");
    if (rec.admission_id.empty()) parse_fail(line_no, "empty admission_id");
    try {
      size_t used = 0;
      rec.admit_time = std::stoll(trim(fields[2]), &used);
      if (used != trim(fields[2]).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      parse_fail(line_no, "admit_time is not an integer: '" + fields[2] + "'");
    }
    const std::string icu = trim(fields[3]);
    if (icu == "0") rec.icu_stay = false;
    else if (icu == "1") rec.icu_stay = true;
    else parse_fail(line_no, "icu_stay must be 0 or 1, got '" + fields[3] + "'");

    for (size_t i = 0; i < kSingleFacetColumns.size(); ++i) {
      const std::string cell = trim(fields[4 + i]);
      if (!cell.empty()) rec.attrs[kSingleFacetColumns[i].first] = cell;
    }
    for (size_t i = 0; i < kMultiFacetColumns.size(); ++i) {
      auto codes = split_codes(fields[12 + i]);
      if (!codes.empty()) rec.codes[kMultiFacetColumns[i].first] = std::move(codes);
    }
    if (!fields[15].empty()) rec.note_text = fields[15];
    check_unique_admission(rec, line_no, admission_owner);
    cohort.records.push_back(std::move(rec));
  }
  return cohort;
}

CohortDataset parse_jsonl(const std::string& text) {
  CohortDataset cohort;
  std::map<std::string, std::string> admission_owner;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      parse_fail(line_no, std::string("bad JSON: ") + e.what());
    }
    if (!doc.is_object()) parse_fail(line_no, "expected a JSON object");
    AdmissionRecord rec;
    try {
      rec.patient_id = doc.at("patient_id").get<std::string>();
      rec.admission_id = doc.at("admission_id").get<std::string>();
      rec.admit_time = doc.at("admit_time").get<int64_t>();
      const auto& icu = doc.at("icu_stay");
      if (icu.is_boolean()) rec.icu_stay = icu.get<bool>();
      else rec.icu_stay = icu.get<int>() != 0;
      for (const auto& [facet, column] : kSingleFacetColumns) {
        if (doc.contains(column) && !doc[column].is_null()) {
          const std::string v = trim(doc[column].get<std::string>());
          if (!v.empty()) rec.attrs[facet] = v;
        }
      }
      for (const auto& [facet, column] : kMultiFacetColumns) {
        if (doc.contains(column) && !doc[column].is_null()) {
          auto codes = normalize_codes(
              doc[column].get<std::vector<std::string>>());
          if (!codes.empty()) rec.codes[facet] = std::move(codes);
        }
      }
      if (doc.contains("note_text") && !doc["note_text"].is_null()) {
        rec.note_text = doc["note_text"].get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      parse_fail(line_no, std::string("record field: ") + e.what());
    }
    if (rec.patient_id.empty()) parse_fail(line_no, "empty patient_id");
    if (rec.admission_id.empty()) parse_fail(line_no, "empty admission_id");
    check_unique_admission(rec, line_no, admission_owner);
    cohort.records.push_back(std::move(rec));
  }
  return cohort;
}

}  // namespace

const std::vector<std::string>& AdmissionRecord::code_list(
    const std::string& facet) const {
  static const std::vector<std::string> kEmpty;
  auto it = codes.find(facet);
  return it == codes.end() ? kEmpty : it->second;
}

const AdmissionRecord* CohortDataset::find_admission(
    const std::string& admission_id) const {
  for (const auto& r : records) {
    if (r.admission_id == admission_id) return &r;
  }
  return nullptr;
}

std::set<std::string> CohortDataset::patient_ids() const {
  std::set<std::string> out;
  for (const auto& r : records) out.insert(r.patient_id);
  return out;
}

std::string normalize_code(const std::string& raw) {
  std::string s = trim(raw);
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> normalize_codes(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : raw) {
    std::string c = normalize_code(r);
    if (c.empty()) continue;
    if (seen.insert(c).second) out.push_back(std::move(c));
  }
  return out;
}

ConceptDictionary ConceptDictionary::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("concept dictionary JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    raise(ErrorCode::Parse, "concept dictionary must be a JSON object");
  }
  static const std::set<std::string> kSocialFacets = {"employment", "household",
                                                      "housing"};
  ConceptDictionary dict;
  for (const auto& [keyword, target] : doc.items()) {
    Target t;
    t.facet = target.at("facet").get<std::string>();
    t.value = target.at("value").get<std::string>();
    if (!kSocialFacets.count(t.facet)) {
      raise(ErrorCode::Parse,
            "concept dictionary targets must be social facets, got: " + t.facet);
    }
    dict.entries[to_lower(trim(keyword))] = std::move(t);
  }
  return dict;
}

CohortDataset parse_cohort_text(const std::string& text, CohortFormat format) {
  return format == CohortFormat::Csv ? parse_csv(text) : parse_jsonl(text);
}

CohortDataset parse_cohort(const std::string& path, CohortFormat format) {
  return parse_cohort_text(read_file(path), format);
}

std::string cohort_to_text(const CohortDataset& cohort, CohortFormat format) {
  std::ostringstream out;
  if (format == CohortFormat::Csv) {
    for (size_t i = 0; i < kCohortColumns.size(); ++i) {
      if (i) out << ',';
      out << kCohortColumns[i];
    }
    out << '\n';
    for (const auto& r : cohort.records) {
      out << csv_escape(r.patient_id) << ',' << csv_escape(r.admission_id) << ','
          << r.admit_time << ',' << (r.icu_stay ? 1 : 0);
      for (const auto& [facet, column] : kSingleFacetColumns) {
        auto v = r.attr(facet);
        out << ',' << (v ? csv_escape(*v) : "");
      }
      for (const auto& [facet, column] : kMultiFacetColumns) {
        out << ',' << csv_escape(join_codes(r.code_list(facet)));
      }
      out << ',' << (r.note_text ? csv_escape(*r.note_text) : "") << '\n';
    }
  } else {
    for (const auto& r : cohort.records) {
      nlohmann::json doc;
      doc["patient_id"] = r.patient_id;
      doc["admission_id"] = r.admission_id;
      doc["admit_time"] = r.admit_time;
      doc["icu_stay"] = r.icu_stay ? 1 : 0;
      for (const auto& [facet, column] : kSingleFacetColumns) {
        if (auto v = r.attr(facet)) doc[column] = *v;
      }
      for (const auto& [facet, column] : kMultiFacetColumns) {
        const auto& codes = r.code_list(facet);
        if (!codes.empty()) doc[column] = codes;
      }
      if (r.note_text) doc["note_text"] = *r.note_text;
      out << doc.dump() << '\n';
    }
  }
  return out.str();
}

void write_cohort(const CohortDataset& cohort, const std::string& path,
                  CohortFormat format) {
  write_file(path, cohort_to_text(cohort, format));
}

CohortDataset label_readmissions(std::vector<AdmissionRecord> records,
                                 int window_days) {
  if (window_days < 0) {
    raise(ErrorCode::InvalidWindow,
          "window_days must be >= 0, got " + std::to_string(window_days));
  }
  CohortDataset out;
  out.records = std::move(records);
  out.labeled = true;

  // patient -> admissions, sorted so the outcome is record-order independent
  std::map<std::string, std::vector<const AdmissionRecord*>> by_patient;
  for (const auto& r : out.records) by_patient[r.patient_id].push_back(&r);

  for (auto& [patient, admissions] : by_patient) {
    const AdmissionRecord* index = nullptr;
    for (const auto* a : admissions) {
      if (!a->icu_stay) continue;
      if (index == nullptr || a->admit_time < index->admit_time ||
          (a->admit_time == index->admit_time &&
           a->admission_id < index->admission_id)) {
        index = a;
      }
    }
    if (index == nullptr) {
      out.n_patients_without_icu += 1;
      continue;
    }
    int label = 0;
    for (const auto* a : admissions) {
      if (a == index) continue;
      const int64_t delta = a->admit_time - index->admit_time;
      if (delta > 0 && delta <= window_days) {
        label = 1;
        break;
      }
    }
    out.index_admissions.insert(index->admission_id);
    out.labels[index->admission_id] = label;
  }
  return out;
}

MissingnessReport assess_missingness(const CohortDataset& cohort,
                                     const Schema& schema) {
  MissingnessReport report;
  report.n_records = cohort.index_admissions.size();
  for (const auto& f : schema.facets()) report.per_facet[f.name] = 0.0;
  if (report.n_records == 0) return report;

  for (const auto& r : cohort.records) {
    if (!cohort.index_admissions.count(r.admission_id)) continue;
    for (const auto& f : schema.facets()) {
      const bool missing = f.arity == ValueArity::Single
                               ? !r.attr(f.name).has_value()
                               : r.code_list(f.name).empty();
      if (missing) report.per_facet[f.name] += 1.0;
    }
  }
  for (auto& [facet, count] : report.per_facet) {
    count /= static_cast<double>(report.n_records);
  }
  return report;
}

CohortDataset enrich_social(const CohortDataset& cohort,
                            const ConceptDictionary& dict) {
  CohortDataset out = cohort;
  std::set<std::string> target_facets;
  for (const auto& [keyword, target] : dict.entries) {
    target_facets.insert(target.facet);
  }
  for (auto& r : out.records) {
    if (!r.note_text) continue;
    const std::string text = to_lower(*r.note_text);
    for (const auto& facet : target_facets) {
      if (r.attrs.count(facet)) continue;  // never overwrite structured values
      // longest keyword wins; ties by earliest position, then keyword order
      const ConceptDictionary::Target* best = nullptr;
      size_t best_len = 0, best_pos = 0;
      for (const auto& [keyword, target] : dict.entries) {
        if (target.facet != facet || keyword.empty()) continue;
        const size_t pos = text.find(keyword);
        if (pos == std::string::npos) continue;
        if (best == nullptr || keyword.size() > best_len ||
            (keyword.size() == best_len && pos < best_pos)) {
          best = &target;
          best_len = keyword.size();
          best_pos = pos;
        }
      }
      if (best) r.attrs[facet] = best->value;
    }
  }
  return out;
}

CohortDataset sample_cohort(const CohortDataset& cohort, size_t n,
                            uint64_t seed) {
  if (n > cohort.index_admissions.size()) {
    raise(ErrorCode::SampleTooLarge,
          "requested " + std::to_string(n) + " index admissions, cohort has " +
              std::to_string(cohort.index_admissions.size()));
  }
  std::vector<std::string> ids(cohort.index_admissions.begin(),
                               cohort.index_admissions.end());
  Rng rng(mix_seed(seed, 0xC04057ULL));
  rng.shuffle(ids);
  ids.resize(n);

  std::set<std::string> keep_admissions(ids.begin(), ids.end());
  std::set<std::string> keep_patients;
  for (const auto& r : cohort.records) {
    if (keep_admissions.count(r.admission_id)) keep_patients.insert(r.patient_id);
  }

  CohortDataset out;
  out.labeled = cohort.labeled;
  out.n_patients_without_icu = 0;
  for (const auto& r : cohort.records) {
    if (keep_patients.count(r.patient_id)) out.records.push_back(r);
  }
  for (const auto& id : keep_admissions) {
    out.index_admissions.insert(id);
    auto it = cohort.labels.find(id);
    if (it != cohort.labels.end()) out.labels[id] = it->second;
  }
  return out;
}

DatasetSummary summarize(const CohortDataset& cohort, const Schema& schema) {
  DatasetSummary s;
  s.n_patients = cohort.patient_ids().size();
  s.n_index_admissions = cohort.index_admissions.size();
  size_t positives = 0;
  for (const auto& [id, label] : cohort.labels) positives += label;
  s.positive_rate = cohort.labels.empty()
                        ? 0.0
                        : static_cast<double>(positives) /
                              static_cast<double>(cohort.labels.size());

  std::map<std::string, std::set<std::string>> vocab;
  std::map<std::string, size_t> age_counts;
  for (const auto& r : cohort.records) {
    if (!cohort.index_admissions.count(r.admission_id)) continue;
    for (const auto& f : schema.facets()) {
      if (f.arity == ValueArity::Single) {
        if (auto v = r.attr(f.name)) vocab[f.name].insert(*v);
      } else {
        for (const auto& c : r.code_list(f.name)) vocab[f.name].insert(c);
      }
    }
    if (auto age = r.attr("age_group")) age_counts[*age] += 1;
  }
  for (const auto& f : schema.facets()) s.vocab_sizes[f.name] = vocab[f.name].size();
  if (s.n_index_admissions > 0) {
    for (const auto& [group, count] : age_counts) {
      s.age_distribution[group] =
          static_cast<double>(count) / static_cast<double>(s.n_index_admissions);
    }
  }
  return s;
}

std::string summary_to_json(const DatasetSummary& summary,
                            const MissingnessReport& missingness) {
  nlohmann::json doc;
  doc["n_patients"] = summary.n_patients;
  doc["n_index_admissions"] = summary.n_index_admissions;
  doc["positive_rate"] = summary.positive_rate;
  doc["vocab_sizes"] = summary.vocab_sizes;
  doc["age_distribution"] = summary.age_distribution;
  doc["missingness"] = {{"n_records", missingness.n_records},
                        {"per_facet", missingness.per_facet}};
  return doc.dump(2);
}

}  // namespace pkg
