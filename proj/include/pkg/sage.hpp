#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pkg/graph.hpp"
#include "pkg/metrics.hpp"
#include "pkg/numeric.hpp"

namespace pkg {

struct TrainConfig {
  int d_embed = 32;
  int d_hidden = 64;
  int n_layers = 2;
  double lr = 1e-3;
  int epochs = 30;
  uint64_t seed = 0;
  double threshold = 0.5;
  std::array<double, 3> split = {0.70, 0.15, 0.15};
  bool class_weighting = false;
  bool early_stopping = false;
  int patience = 5;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  bool operator==(const TrainConfig&) const = default;
};

/// token -> embedding row; the extra last row is the UNK bucket for tokens
/// unseen at vocabulary-build time.
struct EmbeddingTable {
  std::map<std::string, int> vocab;
  Param weights;

  int unk_row() const { return static_cast<int>(vocab.size()); }
  int row_for(const std::string& token) const {
    auto it = vocab.find(token);
    return it == vocab.end() ? unk_row() : it->second;
  }
};

/// One mean-aggregator layer: h'_v = act(W * [h_v ; mean_{u in N(v)} h_u] + b).
struct SageLayer {
  Param W;     // (2*d_in) x d_out
  Param bias;  // 1 x d_out
};

enum class Activation { Linear, Relu };

struct SageModel {
  EmbeddingTable embeddings;
  std::vector<SageLayer> layers;
  Param head_w;  // d_out x 1, zero-initialized
  Param head_b;  // 1 x 1
  TrainConfig config;

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
};

struct EpochStats {
  double train_loss = 0.0;
  Metrics val;
};

struct TrainResult {
  SageModel model;
  std::vector<EpochStats> history;
  Metrics test;
};

/// Node feature matrix: row i = embedding of node i's token.
Matrix embed(const PatientGraph& graph, const EmbeddingTable& table);

Matrix sage_forward(const Matrix& features, const PatientGraph& graph,
                    const SageLayer& layer, Activation activation);

/// Readmission probability from the patient-node readout; always in (0,1).
double predict(const SageModel& model, const PatientGraph& graph);

/// Loss-only pass (no gradients).
double loss_for_graph(const SageModel& model, const PatientGraph& graph,
                      double sample_weight = 1.0);

/// Forward + backward; accumulates gradients into the model's Params.
/// Returns the (weighted) loss.
double forward_backward(SageModel& model, const PatientGraph& graph,
                        double sample_weight = 1.0);

/// Vocabulary from the given graphs, random layer init, zero head.
SageModel init_model(const std::vector<PatientGraph>& vocab_graphs,
                     const TrainConfig& config);

/// Stratified split indices (train, val, test), deterministic given seed.
std::array<std::vector<size_t>, 3> stratified_split(
    const std::vector<PatientGraph>& graphs, const TrainConfig& config);

TrainResult train(const std::vector<PatientGraph>& graphs,
                  const TrainConfig& config);

Metrics evaluate(const SageModel& model,
                 const std::vector<PatientGraph>& graphs, double threshold);

std::string model_to_json(const SageModel& model);
SageModel model_from_json(const std::string& text);

}  // namespace pkg
