#include "pkg/schema.hpp"

#include <set>

#include <json.hpp>

#include "pkg/error.hpp"

namespace pkg {

const char* to_string(View v) {
  switch (v) {
    case View::Demographic: return "Demographic";
    case View::Clinical: return "Clinical";
    case View::Social: return "Social";
  }
  return "?";
}

const char* to_string(ValueArity a) {
  return a == ValueArity::Single ? "Single" : "Multi";
}

const char* to_string(GraphVersion v) {
  return v == GraphVersion::V1 ? "V1" : "V3";
}

View view_from_string(const std::string& s) {
  if (s == "Demographic") return View::Demographic;
  if (s == "Clinical") return View::Clinical;
  if (s == "Social") return View::Social;
  raise(ErrorCode::Parse, "unknown view: " + s);
}

ValueArity arity_from_string(const std::string& s) {
  if (s == "Single") return ValueArity::Single;
  if (s == "Multi") return ValueArity::Multi;
  raise(ErrorCode::Parse, "unknown arity: " + s);
}

GraphVersion version_from_string(const std::string& s) {
  if (s == "V1") return GraphVersion::V1;
  if (s == "V3") return GraphVersion::V3;
  raise(ErrorCode::UnsupportedVersion, "unsupported graph version: " + s);
}

TopologyDescriptor topology_for(GraphVersion version) {
  if (version == GraphVersion::V1) {
    return {GraphVersion::V1, true, EdgeDirection::PatientToAttribute};
  }
  return {GraphVersion::V3, false, EdgeDirection::Undirected};
}

Schema::Schema(std::vector<Facet> facets, TopologyDescriptor topology)
    : facets_(std::move(facets)), topology_(topology) {
  std::set<std::string> seen;
  for (const auto& f : facets_) {
    if (f.name.empty()) raise(ErrorCode::Parse, "facet with empty name");
    if (!seen.insert(f.name).second) {
      raise(ErrorCode::Parse, "duplicate facet name: " + f.name);
    }
  }
}

const Facet* Schema::find(const std::string& name) const {
  for (const auto& f : facets_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::vector<Facet> Schema::facets_of_view(View v) const {
  std::vector<Facet> out;
  for (const auto& f : facets_) {
    if (f.view == v) out.push_back(f);
  }
  return out;
}

std::string Schema::to_json() const {
  nlohmann::json doc;
  doc["version"] = to_string(topology_.version);
  doc["facets"] = nlohmann::json::array();
  for (const auto& f : facets_) {
    doc["facets"].push_back({{"name", f.name},
                             {"view", to_string(f.view)},
                             {"arity", to_string(f.arity)}});
  }
  return doc.dump(2);
}

Schema Schema::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("schema JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("version") || !doc.contains("facets")) {
    raise(ErrorCode::Parse, "schema JSON: expected {version, facets}");
  }
  GraphVersion version = version_from_string(doc["version"].get<std::string>());
  std::vector<Facet> facets;
  for (const auto& jf : doc["facets"]) {
    Facet f;
    f.name = jf.at("name").get<std::string>();
    f.view = view_from_string(jf.at("view").get<std::string>());
    f.arity = arity_from_string(jf.at("arity").get<std::string>());
    facets.push_back(std::move(f));
  }
  return Schema(std::move(facets), topology_for(version));
}

Schema default_schema(GraphVersion version) {
  std::vector<Facet> facets = {
      {"age_group", View::Demographic, ValueArity::Single},
      {"gender", View::Demographic, ValueArity::Single},
      {"religion", View::Demographic, ValueArity::Single},
      {"marital_status", View::Demographic, ValueArity::Single},
      {"race", View::Demographic, ValueArity::Single},
      {"disease", View::Clinical, ValueArity::Multi},
      {"medication", View::Clinical, ValueArity::Multi},
      {"procedure", View::Clinical, ValueArity::Multi},
      {"employment", View::Social, ValueArity::Single},
      {"household", View::Social, ValueArity::Single},
      {"housing", View::Social, ValueArity::Single},
  };
  return Schema(std::move(facets), topology_for(version));
}

}  // namespace pkg
