#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pkg/cohort.hpp"
#include "pkg/schema.hpp"

namespace pkg {

struct Node {
  int id = 0;
  std::string node_type;  // facet name, or "patient" for node 0
  std::string token;      // "facet:value", or "patient"
};

struct Edge {
  int src = 0;
  int dst = 0;
};

/// Exclusion set applied before node creation.
struct FacetMask {
  std::set<std::string> excluded_facets;
  std::map<std::string, std::set<std::string>> excluded_codes;

  bool empty() const { return excluded_facets.empty() && excluded_codes.empty(); }
  bool excludes_facet(const std::string& facet) const {
    return excluded_facets.count(facet) > 0;
  }
  bool excludes_code(const std::string& facet, const std::string& code) const;

  std::string to_json() const;
  static FacetMask from_json(const std::string& text);
  bool operator==(const FacetMask&) const = default;
};

/// Hub-and-spoke per-admission graph. Node 0 is the patient. Edges are
/// stored patient->attribute; for V1 they are flagged directed, for V3
/// undirected. Message passing treats the star symmetrically either way
/// (a directed star would otherwise leave the patient node blind).
struct PatientGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  bool directed = false;
  int label = 0;
  std::string admission_id;
  std::vector<std::vector<int>> adjacency;

  void rebuild_adjacency();
  size_t n_nodes() const { return nodes.size(); }
};

PatientGraph build_graph(const AdmissionRecord& record, int label,
                         const Schema& schema, const FacetMask& mask = {});

/// Message-passing neighborhood of a node; raises InvalidNode on bad index.
const std::vector<int>& neighbors(const PatientGraph& graph, int node);

/// Empty iff the graph satisfies all structural invariants and the mask.
std::vector<std::string> validate_graph(const PatientGraph& graph,
                                        const Schema& schema,
                                        const FacetMask& mask = {});

/// One graph per labeled index admission, in cohort record order.
std::vector<PatientGraph> build_graphs(const CohortDataset& cohort,
                                       const Schema& schema,
                                       const FacetMask& mask = {});

std::string graph_to_json_line(const PatientGraph& graph);
PatientGraph graph_from_json_line(const std::string& line);
void write_graphs_jsonl(const std::vector<PatientGraph>& graphs,
                        const std::string& path);
std::string graphs_to_jsonl(const std::vector<PatientGraph>& graphs);
std::vector<PatientGraph> read_graphs_jsonl(const std::string& path);
std::vector<PatientGraph> parse_graphs_jsonl(const std::string& text);

}  // namespace pkg
