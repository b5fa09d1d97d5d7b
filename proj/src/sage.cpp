#include "pkg/sage.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pkg/error.hpp"
#include "pkg/rng.hpp"

namespace pkg {

namespace {

// stream ids for deriving independent rngs from the config seed
constexpr uint64_t kStreamEmbed = 1;
constexpr uint64_t kStreamSplit = 2;
constexpr uint64_t kStreamShuffle = 3;
constexpr uint64_t kStreamLayerBase = 16;

void add_row_inplace(Matrix& m, const Matrix& row) {
  for (size_t i = 0; i < m.rows(); ++i) {
    double* dst = m.row(i);
    for (size_t j = 0; j < m.cols(); ++j) dst[j] += row.at(0, j);
  }
}

Matrix col_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  for (size_t i = 0; i < m.rows(); ++i) {
    const double* src = m.row(i);
    for (size_t j = 0; j < m.cols(); ++j) out.data()[j] += src[j];
  }
  return out;
}

Matrix glorot_uniform(size_t rows, size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return m;
}

struct ForwardCache {
  std::vector<Matrix> inputs;   // X_0 .. X_L (X_0 = embeddings)
  std::vector<Matrix> concats;  // Z_l per layer
  std::vector<Matrix> preacts;  // H_l per layer
  double logit = 0.0;
  double prob = 0.5;
};

Matrix concat_self_and_mean(const Matrix& features, const PatientGraph& graph) {
  const size_t d = features.cols();
  Matrix z(features.rows(), 2 * d);
  for (size_t v = 0; v < features.rows(); ++v) {
    const auto& nbrs = neighbors(graph, static_cast<int>(v));
    Matrix mean = row_mean(features, nbrs);
    std::copy(features.row(v), features.row(v) + d, z.row(v));
    std::copy(mean.data().begin(), mean.data().end(), z.row(v) + d);
  }
  return z;
}

ForwardCache run_forward(const SageModel& model, const PatientGraph& graph) {
  ForwardCache cache;
  cache.inputs.push_back(embed(graph, model.embeddings));
  for (size_t li = 0; li < model.layers.size(); ++li) {
    const auto& layer = model.layers[li];
    const Matrix& x = cache.inputs.back();
    Matrix z = concat_self_and_mean(x, graph);
    Matrix h = matmul(z, layer.W.value);
    add_row_inplace(h, layer.bias.value);
    cache.concats.push_back(std::move(z));
    // ReLU between layers only; the readout comes from the last layer unsquashed
    Matrix a = li + 1 < model.layers.size() ? relu(h) : h;
    cache.inputs.push_back(std::move(a));
    cache.preacts.push_back(std::move(h));
  }
  const Matrix& readout = cache.inputs.back();
  double logit = model.head_b.value.at(0, 0);
  for (size_t j = 0; j < readout.cols(); ++j) {
    logit += readout.at(0, j) * model.head_w.value.at(j, 0);
  }
  cache.logit = logit;
  cache.prob = sigmoid(logit);
  return cache;
}

void run_backward(SageModel& model, const PatientGraph& graph,
                  const ForwardCache& cache, double dlogit) {
  const size_t L = model.layers.size();
  const Matrix& readout = cache.inputs.back();

  for (size_t j = 0; j < readout.cols(); ++j) {
    model.head_w.grad.at(j, 0) += readout.at(0, j) * dlogit;
  }
  model.head_b.grad.at(0, 0) += dlogit;

  // gradient w.r.t. the final node states: only the patient row feeds the head
  Matrix dx(readout.rows(), readout.cols());
  for (size_t j = 0; j < readout.cols(); ++j) {
    dx.at(0, j) = model.head_w.value.at(j, 0) * dlogit;
  }

  for (size_t li = L; li-- > 0;) {
    SageLayer& layer = model.layers[li];
    const Matrix dh = li + 1 < L ? relu_backward(cache.preacts[li], dx) : dx;
    layer.W.grad = add(layer.W.grad, matmul(transpose(cache.concats[li]), dh));
    layer.bias.grad = add(layer.bias.grad, col_sums(dh));
    const Matrix dz = matmul(dh, transpose(layer.W.value));

    const size_t d_in = cache.inputs[li].cols();
    Matrix dprev(cache.inputs[li].rows(), d_in);
    for (size_t v = 0; v < dprev.rows(); ++v) {
      const double* dzv = dz.row(v);
      double* self = dprev.row(v);
      for (size_t j = 0; j < d_in; ++j) self[j] += dzv[j];
      const auto& nbrs = neighbors(graph, static_cast<int>(v));
      if (nbrs.empty()) continue;
      const double inv = 1.0 / static_cast<double>(nbrs.size());
      for (int u : nbrs) {
        double* urow = dprev.row(static_cast<size_t>(u));
        for (size_t j = 0; j < d_in; ++j) urow[j] += dzv[d_in + j] * inv;
      }
    }
    dx = std::move(dprev);
  }

  // scatter into the embedding rows (shared tokens accumulate)
  for (size_t i = 0; i < graph.nodes.size(); ++i) {
    const int row = model.embeddings.row_for(graph.nodes[i].token);
    double* grad = model.embeddings.weights.grad.row(static_cast<size_t>(row));
    for (size_t j = 0; j < dx.cols(); ++j) grad[j] += dx.at(i, j);
  }
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (size_t j = 0; j < m.cols(); ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty()) {
    raise(ErrorCode::Parse, "model JSON: expected a non-empty matrix");
  }
  Matrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < m.rows(); ++i) {
    if (rows[i].size() != m.cols()) {
      raise(ErrorCode::Parse, "model JSON: ragged matrix");
    }
    for (size_t j = 0; j < m.cols(); ++j) m.at(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

void TrainConfig::validate() const {
  if (d_embed < 1 || d_hidden < 1 || n_layers < 1) {
    raise(ErrorCode::InvalidInput, "model dimensions must be >= 1");
  }
  if (epochs < 0) raise(ErrorCode::InvalidInput, "epochs must be >= 0");
  if (lr <= 0.0) raise(ErrorCode::InvalidInput, "learning rate must be > 0");
  double total = 0.0;
  for (double s : split) {
    if (s < 0.0) raise(ErrorCode::InvalidInput, "split fractions must be >= 0");
    total += s;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    raise(ErrorCode::InvalidInput, "split fractions must sum to 1");
  }
}

std::string TrainConfig::to_json() const {
  nlohmann::json doc;
  doc["d_embed"] = d_embed;
  doc["d_hidden"] = d_hidden;
  doc["n_layers"] = n_layers;
  doc["lr"] = lr;
  doc["epochs"] = epochs;
  doc["seed"] = seed;
  doc["threshold"] = threshold;
  doc["split"] = split;
  doc["class_weighting"] = class_weighting;
  doc["early_stopping"] = early_stopping;
  doc["patience"] = patience;
  return doc.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("train config JSON: ") + e.what());
  }
  TrainConfig cfg;
  try {
    if (doc.contains("d_embed")) cfg.d_embed = doc["d_embed"].get<int>();
    if (doc.contains("d_hidden")) cfg.d_hidden = doc["d_hidden"].get<int>();
    if (doc.contains("n_layers")) cfg.n_layers = doc["n_layers"].get<int>();
    if (doc.contains("lr")) cfg.lr = doc["lr"].get<double>();
    if (doc.contains("epochs")) cfg.epochs = doc["epochs"].get<int>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<uint64_t>();
    if (doc.contains("threshold")) cfg.threshold = doc["threshold"].get<double>();
    if (doc.contains("split")) {
      auto v = doc["split"].get<std::vector<double>>();
      if (v.size() != 3) raise(ErrorCode::Parse, "split must have 3 fractions");
      std::copy(v.begin(), v.end(), cfg.split.begin());
    }
    if (doc.contains("class_weighting"))
      cfg.class_weighting = doc["class_weighting"].get<bool>();
    if (doc.contains("early_stopping"))
      cfg.early_stopping = doc["early_stopping"].get<bool>();
    if (doc.contains("patience")) cfg.patience = doc["patience"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("train config field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<Param*> SageModel::params() {
  std::vector<Param*> out = {&embeddings.weights};
  for (auto& layer : layers) {
    out.push_back(&layer.W);
    out.push_back(&layer.bias);
  }
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

std::vector<const Param*> SageModel::params() const {
  auto mutable_params = const_cast<SageModel*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

Matrix embed(const PatientGraph& graph, const EmbeddingTable& table) {
  Matrix out(graph.nodes.size(), table.weights.value.cols());
  for (size_t i = 0; i < graph.nodes.size(); ++i) {
    const int row = table.row_for(graph.nodes[i].token);
    const double* src = table.weights.value.row(static_cast<size_t>(row));
    std::copy(src, src + out.cols(), out.row(i));
  }
  return out;
}

Matrix sage_forward(const Matrix& features, const PatientGraph& graph,
                    const SageLayer& layer, Activation activation) {
  if (features.rows() != graph.nodes.size()) {
    raise(ErrorCode::Shape, "sage_forward: feature rows != node count");
  }
  if (2 * features.cols() != layer.W.value.rows()) {
    raise(ErrorCode::Shape, "sage_forward: weight shape does not match input");
  }
  Matrix z = concat_self_and_mean(features, graph);
  Matrix h = matmul(z, layer.W.value);
  add_row_inplace(h, layer.bias.value);
  return activation == Activation::Relu ? relu(h) : h;
}

double predict(const SageModel& model, const PatientGraph& graph) {
  return clamp_prob(run_forward(model, graph).prob);
}

double loss_for_graph(const SageModel& model, const PatientGraph& graph,
                      double sample_weight) {
  const ForwardCache cache = run_forward(model, graph);
  return bce_loss(cache.prob, graph.label, sample_weight).loss;
}

double forward_backward(SageModel& model, const PatientGraph& graph,
                        double sample_weight) {
  const ForwardCache cache = run_forward(model, graph);
  const BceResult bce = bce_loss(cache.prob, graph.label, sample_weight);
  run_backward(model, graph, cache, bce.dlogit);
  return bce.loss;
}

SageModel init_model(const std::vector<PatientGraph>& vocab_graphs,
                     const TrainConfig& config) {
  config.validate();
  SageModel model;
  model.config = config;

  int next_row = 0;
  for (const auto& g : vocab_graphs) {
    for (const auto& node : g.nodes) {
      if (model.embeddings.vocab.emplace(node.token, next_row).second) ++next_row;
    }
  }
  Rng embed_rng(mix_seed(config.seed, kStreamEmbed));
  Matrix table(static_cast<size_t>(next_row) + 1,
               static_cast<size_t>(config.d_embed));
  for (double& v : table.data()) v = embed_rng.uniform(-0.1, 0.1);
  model.embeddings.weights = Param(std::move(table));

  for (int l = 0; l < config.n_layers; ++l) {
    const size_t d_in = l == 0 ? config.d_embed : config.d_hidden;
    Rng layer_rng(mix_seed(config.seed, kStreamLayerBase + l));
    SageLayer layer{
        Param(glorot_uniform(2 * d_in, config.d_hidden, layer_rng)),
        Param(Matrix(1, config.d_hidden))};
    model.layers.push_back(std::move(layer));
  }
  // zero head: an untrained model outputs exactly 0.5
  model.head_w = Param(Matrix(static_cast<size_t>(config.d_hidden), 1));
  model.head_b = Param(Matrix(1, 1));
  return model;
}

std::array<std::vector<size_t>, 3> stratified_split(
    const std::vector<PatientGraph>& graphs, const TrainConfig& config) {
  std::array<std::vector<size_t>, 2> by_class;
  for (size_t i = 0; i < graphs.size(); ++i) {
    by_class[graphs[i].label ? 1 : 0].push_back(i);
  }
  Rng rng(mix_seed(config.seed, kStreamSplit));
  std::array<std::vector<size_t>, 3> splits;
  for (auto& ids : by_class) {
    rng.shuffle(ids);
    const size_t n = ids.size();
    const size_t n_train = static_cast<size_t>(config.split[0] * n);
    const size_t n_train_val =
        static_cast<size_t>((config.split[0] + config.split[1]) * n);
    for (size_t i = 0; i < n; ++i) {
      if (i < n_train) splits[0].push_back(ids[i]);
      else if (i < n_train_val) splits[1].push_back(ids[i]);
      else splits[2].push_back(ids[i]);
    }
  }
  for (auto& s : splits) std::sort(s.begin(), s.end());
  return splits;
}

TrainResult train(const std::vector<PatientGraph>& graphs,
                  const TrainConfig& config) {
  config.validate();
  if (graphs.size() < 10) {
    raise(ErrorCode::InvalidInput,
          "training needs at least 10 graphs, got " +
              std::to_string(graphs.size()));
  }
  const auto splits = stratified_split(graphs, config);
  const auto& train_ids = splits[0];

  size_t n_pos = 0, n_neg = 0;
  for (size_t i : train_ids) {
    if (graphs[i].label) ++n_pos;
    else ++n_neg;
  }
  if (n_pos == 0 || n_neg == 0) {
    raise(ErrorCode::DegenerateSplit,
          "training split contains a single class (pos=" +
              std::to_string(n_pos) + ", neg=" + std::to_string(n_neg) + ")");
  }
  const double w_pos =
      config.class_weighting
          ? static_cast<double>(n_neg) / static_cast<double>(n_pos)
          : 1.0;

  std::vector<PatientGraph> vocab_graphs;
  vocab_graphs.reserve(train_ids.size());
  for (size_t i : train_ids) vocab_graphs.push_back(graphs[i]);

  TrainResult result{init_model(vocab_graphs, config), {}, {}};
  SageModel& model = result.model;

  auto subset = [&graphs](const std::vector<size_t>& ids) {
    std::vector<PatientGraph> out;
    out.reserve(ids.size());
    for (size_t i : ids) out.push_back(graphs[i]);
    return out;
  };
  const std::vector<PatientGraph> val_graphs = subset(splits[1]);
  const std::vector<PatientGraph> test_graphs = subset(splits[2]);

  const AdamConfig adam{config.lr, 0.9, 0.999, 1e-8};
  Rng shuffle_rng(mix_seed(config.seed, kStreamShuffle));
  std::vector<size_t> order(train_ids.begin(), train_ids.end());

  double best_val_f1 = -1.0;
  int since_best = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t idx : order) {
      const PatientGraph& g = graphs[idx];
      loss_sum += forward_backward(model, g, g.label ? w_pos : 1.0);
      for (Param* p : model.params()) adam_step(*p, adam);
    }
    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    if (!val_graphs.empty()) {
      stats.val = evaluate(model, val_graphs, config.threshold);
    }
    result.history.push_back(stats);

    if (config.early_stopping && !val_graphs.empty()) {
      if (stats.val.f1 > best_val_f1) {
        best_val_f1 = stats.val.f1;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  if (!test_graphs.empty()) {
    result.test = evaluate(model, test_graphs, config.threshold);
  }
  return result;
}

Metrics evaluate(const SageModel& model,
                 const std::vector<PatientGraph>& graphs, double threshold) {
  if (graphs.empty()) {
    raise(ErrorCode::EmptyEvaluation, "no graphs to evaluate");
  }
  std::vector<double> predictions;
  std::vector<int> labels;
  predictions.reserve(graphs.size());
  labels.reserve(graphs.size());
  for (const auto& g : graphs) {
    predictions.push_back(predict(model, g));
    labels.push_back(g.label);
  }
  return compute_metrics(predictions, labels, threshold);
}

std::string model_to_json(const SageModel& model) {
  nlohmann::json doc;
  doc["format"] = "pkgraph-model-v1";
  doc["config"] = nlohmann::json::parse(model.config.to_json());
  doc["vocab"] = model.embeddings.vocab;
  doc["embedding_weights"] = matrix_to_json(model.embeddings.weights.value);
  doc["layers"] = nlohmann::json::array();
  for (const auto& layer : model.layers) {
    doc["layers"].push_back({{"W", matrix_to_json(layer.W.value)},
                             {"bias", matrix_to_json(layer.bias.value)}});
  }
  doc["head_w"] = matrix_to_json(model.head_w.value);
  doc["head_b"] = model.head_b.value.at(0, 0);
  return doc.dump();
}

SageModel model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("model JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "pkgraph-model-v1") {
    raise(ErrorCode::Parse, "model JSON: unknown or missing format tag");
  }
  SageModel model;
  try {
    model.config = TrainConfig::from_json(doc.at("config").dump());
    model.embeddings.vocab =
        doc.at("vocab").get<std::map<std::string, int>>();
    model.embeddings.weights = Param(matrix_from_json(doc.at("embedding_weights")));
    for (const auto& jl : doc.at("layers")) {
      SageLayer layer{Param(matrix_from_json(jl.at("W"))),
                      Param(matrix_from_json(jl.at("bias")))};
      model.layers.push_back(std::move(layer));
    }
    model.head_w = Param(matrix_from_json(doc.at("head_w")));
    Matrix hb(1, 1);
    hb.at(0, 0) = doc.at("head_b").get<double>();
    model.head_b = Param(std::move(hb));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Parse, std::string("model JSON field: ") + e.what());
  }
  if (model.embeddings.weights.value.rows() !=
      model.embeddings.vocab.size() + 1) {
    raise(ErrorCode::Parse, "model JSON: embedding table / vocab mismatch");
  }
  return model;
}

}  // namespace pkg
