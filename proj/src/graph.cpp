#include "pkg/graph.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "pkg/error.hpp"
#include "pkg/io_util.hpp"

namespace pkg {

bool FacetMask::excludes_code(const std::string& facet,
                              const std::string& code) const {
  auto it = excluded_codes.find(facet);
  return it != excluded_codes.end() && it->second.count(code) > 0;
}

std::string FacetMask::to_json() const {
  nlohmann::json doc;
  doc["excluded_facets"] = excluded_facets;
  doc["excluded_codes"] = nlohmann::json::object();
  for (const auto& [facet, codes] : excluded_codes) {
    doc["excluded_codes"][facet] = codes;
  }
  return doc.dump();
}

FacetMask FacetMask::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("mask JSON: ") + e.what());
  }
  FacetMask mask;
  if (doc.contains("excluded_facets")) {
    for (const auto& f : doc["excluded_facets"]) {
      mask.excluded_facets.insert(f.get<std::string>());
    }
  }
  if (doc.contains("excluded_codes")) {
    for (const auto& [facet, codes] : doc["excluded_codes"].items()) {
      for (const auto& c : codes) {
        mask.excluded_codes[facet].insert(normalize_code(c.get<std::string>()));
      }
    }
  }
  return mask;
}

void PatientGraph::rebuild_adjacency() {
  adjacency.assign(nodes.size(), {});
  for (const auto& e : edges) {
    adjacency[static_cast<size_t>(e.src)].push_back(e.dst);
    adjacency[static_cast<size_t>(e.dst)].push_back(e.src);
  }
}

PatientGraph build_graph(const AdmissionRecord& record, int label,
                         const Schema& schema, const FacetMask& mask) {
  PatientGraph g;
  g.directed = schema.topology().directed;
  g.label = label;
  g.admission_id = record.admission_id;
  g.nodes.push_back({0, "patient", "patient"});

  auto add_attribute = [&g](const std::string& facet, const std::string& value) {
    const int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({id, facet, facet + ":" + value});
    g.edges.push_back({0, id});
  };

  for (const auto& f : schema.facets()) {
    if (mask.excludes_facet(f.name)) continue;
    if (f.arity == ValueArity::Single) {
      if (auto v = record.attr(f.name)) add_attribute(f.name, *v);
    } else {
      std::vector<std::string> codes = record.code_list(f.name);
      std::sort(codes.begin(), codes.end());
      for (const auto& code : codes) {
        if (mask.excludes_code(f.name, code)) continue;
        add_attribute(f.name, code);
      }
    }
  }
  g.rebuild_adjacency();
  return g;
}

const std::vector<int>& neighbors(const PatientGraph& graph, int node) {
  if (node < 0 || static_cast<size_t>(node) >= graph.nodes.size()) {
    raise(ErrorCode::InvalidNode,
          "node index " + std::to_string(node) + " out of range [0, " +
              std::to_string(graph.nodes.size()) + ")");
  }
  return graph.adjacency[static_cast<size_t>(node)];
}

std::vector<std::string> validate_graph(const PatientGraph& graph,
                                        const Schema& schema,
                                        const FacetMask& mask) {
  std::vector<std::string> violations;
  auto bad = [&violations](const std::string& msg) { violations.push_back(msg); };

  if (graph.nodes.empty()) {
    bad("graph has no nodes");
    return violations;
  }
  if (graph.nodes[0].node_type != "patient" || graph.nodes[0].token != "patient") {
    bad("node 0 is not the patient node");
  }
  if (graph.label != 0 && graph.label != 1) {
    bad("label must be 0 or 1");
  }
  const int n = static_cast<int>(graph.nodes.size());
  for (size_t i = 0; i < graph.nodes.size(); ++i) {
    const Node& node = graph.nodes[i];
    if (node.id != static_cast<int>(i)) {
      bad("node " + std::to_string(i) + " has id " + std::to_string(node.id));
    }
    if (i == 0) continue;
    if (node.node_type == "patient") {
      bad("extra patient node at index " + std::to_string(i));
      continue;
    }
    const Facet* facet = schema.find(node.node_type);
    if (facet == nullptr) {
      bad("node " + std::to_string(i) + ": unknown facet " + node.node_type);
      continue;
    }
    const std::string prefix = node.node_type + ":";
    if (node.token.rfind(prefix, 0) != 0 || node.token.size() <= prefix.size()) {
      bad("node " + std::to_string(i) + ": token '" + node.token +
          "' does not match type " + node.node_type);
      continue;
    }
    if (mask.excludes_facet(node.node_type)) {
      bad("node " + std::to_string(i) + ": facet " + node.node_type +
          " is excluded by the mask");
    }
    const std::string value = node.token.substr(prefix.size());
    if (mask.excludes_code(node.node_type, value)) {
      bad("node " + std::to_string(i) + ": code " + value +
          " is excluded by the mask");
    }
  }
  std::set<std::pair<int, int>> seen_edges;
  for (const auto& e : graph.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      bad("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
          ") has an out-of-range endpoint");
      continue;
    }
    if (e.src == e.dst) {
      bad("self-loop at node " + std::to_string(e.src));
    }
    if (!seen_edges.insert({e.src, e.dst}).second) {
      bad("duplicate edge (" + std::to_string(e.src) + "," +
          std::to_string(e.dst) + ")");
    }
  }
  // connectivity from node 0, ignoring direction
  std::vector<bool> reached(graph.nodes.size(), false);
  std::vector<int> stack = {0};
  reached[0] = true;
  std::vector<std::vector<int>> adj(graph.nodes.size());
  for (const auto& e : graph.edges) {
    if (e.src >= 0 && e.src < n && e.dst >= 0 && e.dst < n) {
      adj[static_cast<size_t>(e.src)].push_back(e.dst);
      adj[static_cast<size_t>(e.dst)].push_back(e.src);
    }
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[static_cast<size_t>(v)]) {
      if (!reached[static_cast<size_t>(u)]) {
        reached[static_cast<size_t>(u)] = true;
        stack.push_back(u);
      }
    }
  }
  for (size_t i = 0; i < reached.size(); ++i) {
    if (!reached[i]) {
      bad("node " + std::to_string(i) + " not reachable from the patient node");
    }
  }
  return violations;
}

std::vector<PatientGraph> build_graphs(const CohortDataset& cohort,
                                       const Schema& schema,
                                       const FacetMask& mask) {
  std::vector<PatientGraph> graphs;
  graphs.reserve(cohort.index_admissions.size());
  for (const auto& r : cohort.records) {
    auto it = cohort.labels.find(r.admission_id);
    if (it == cohort.labels.end()) continue;
    if (!cohort.index_admissions.count(r.admission_id)) continue;
    graphs.push_back(build_graph(r, it->second, schema, mask));
  }
  return graphs;
}

std::string graph_to_json_line(const PatientGraph& graph) {
  nlohmann::json doc;
  doc["admission_id"] = graph.admission_id;
  doc["label"] = graph.label;
  doc["directed"] = graph.directed;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& node : graph.nodes) {
    doc["nodes"].push_back({{"type", node.node_type}, {"token", node.token}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    doc["edges"].push_back({e.src, e.dst});
  }
  return doc.dump();
}

PatientGraph graph_from_json_line(const std::string& line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("graph JSON: ") + e.what());
  }
  PatientGraph g;
  try {
    g.admission_id = doc.at("admission_id").get<std::string>();
    g.label = doc.at("label").get<int>();
    g.directed = doc.at("directed").get<bool>();
    int id = 0;
    for (const auto& jn : doc.at("nodes")) {
      Node node;
      node.id = id++;
      node.node_type = jn.at("type").get<std::string>();
      node.token = jn.at("token").get<std::string>();
      g.nodes.push_back(std::move(node));
    }
    for (const auto& je : doc.at("edges")) {
      g.edges.push_back({je.at(0).get<int>(), je.at(1).get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("graph JSON field: ") + e.what());
  }
  if (g.label != 0 && g.label != 1) {
    raise(ErrorCode::Parse, "graph label must be 0 or 1");
  }
  if (g.nodes.empty() || g.nodes[0].node_type != "patient") {
    raise(ErrorCode::Parse, "graph node 0 must be the patient node");
  }
  const int n = static_cast<int>(g.nodes.size());
  for (const auto& e : g.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      raise(ErrorCode::Parse, "graph edge endpoint out of range");
    }
  }
  g.rebuild_adjacency();
  return g;
}

std::string graphs_to_jsonl(const std::vector<PatientGraph>& graphs) {
  std::ostringstream out;
  for (const auto& g : graphs) out << graph_to_json_line(g) << '\n';
  return out.str();
}

void write_graphs_jsonl(const std::vector<PatientGraph>& graphs,
                        const std::string& path) {
  write_file(path, graphs_to_jsonl(graphs));
}

std::vector<PatientGraph> parse_graphs_jsonl(const std::string& text) {
  std::vector<PatientGraph> graphs;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    graphs.push_back(graph_from_json_line(line));
  }
  return graphs;
}

std::vector<PatientGraph> read_graphs_jsonl(const std::string& path) {
  return parse_graphs_jsonl(read_file(path));
}

}  // namespace pkg
