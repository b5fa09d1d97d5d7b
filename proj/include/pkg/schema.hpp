#pragma once

#include <string>
#include <vector>

namespace pkg {

enum class View { Demographic, Clinical, Social };
enum class ValueArity { Single, Multi };
enum class GraphVersion { V1, V3 };
enum class EdgeDirection { PatientToAttribute, AttributeToPatient, Undirected };

const char* to_string(View v);
const char* to_string(ValueArity a);
const char* to_string(GraphVersion v);
View view_from_string(const std::string& s);
ValueArity arity_from_string(const std::string& s);
/// "V1" or "V3"; anything else raises UnsupportedVersion.
GraphVersion version_from_string(const std::string& s);

/// One attribute family (e.g. marital_status, disease).
struct Facet {
  std::string name;
  View view = View::Demographic;
  ValueArity arity = ValueArity::Single;
};

struct TopologyDescriptor {
  GraphVersion version = GraphVersion::V1;
  bool directed = true;
  EdgeDirection edge_direction = EdgeDirection::PatientToAttribute;
};

TopologyDescriptor topology_for(GraphVersion version);

/// Ordered facet list plus the graph topology. Immutable after construction.
class Schema {
 public:
  Schema(std::vector<Facet> facets, TopologyDescriptor topology);

  const std::vector<Facet>& facets() const { return facets_; }
  const TopologyDescriptor& topology() const { return topology_; }

  const Facet* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
  std::vector<Facet> facets_of_view(View v) const;

  std::string to_json() const;
  static Schema from_json(const std::string& text);

 private:
  std::vector<Facet> facets_;
  TopologyDescriptor topology_;
};

/// The default facet list: five demographic, three clinical, three social.
Schema default_schema(GraphVersion version);

}  // namespace pkg
