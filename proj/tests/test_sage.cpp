#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "pkg/error.hpp"
#include "pkg/graph.hpp"
#include "pkg/rng.hpp"
#include "pkg/sage.hpp"
#include "pkg/schema.hpp"
#include "test_util.hpp"

using namespace pkg;
using testutil::code_of;
using testutil::record;

namespace {

AdmissionRecord small_record(int variant = 0) {
  AdmissionRecord r = record("p", "a" + std::to_string(variant), 0, true);
  r.attrs["gender"] = variant % 2 ? "F" : "M";
  r.attrs["race"] = "R" + std::to_string(variant % 3);
  r.codes["disease"] = {"X" + std::to_string(variant % 2),
                        "Y" + std::to_string(variant % 3)};
  return r;
}

// label follows gender: F -> 1, M -> 0, with race as noise
std::vector<PatientGraph> separable_graphs(int n, GraphVersion version) {
  Schema schema = default_schema(version);
  std::vector<PatientGraph> graphs;
  for (int i = 0; i < n; ++i) {
    AdmissionRecord r = record("p" + std::to_string(i),
                               "a" + std::to_string(i), 0, true);
    const int label = i % 2;
    r.attrs["gender"] = label ? "F" : "M";
    r.attrs["race"] = "R" + std::to_string(i % 3);
    graphs.push_back(build_graph(r, label, schema));
  }
  return graphs;
}

// reverses the attribute node order, patient stays at index 0
PatientGraph permute_attributes(const PatientGraph& g) {
  const size_t n = g.nodes.size();
  std::vector<int> map(n);
  map[0] = 0;
  for (size_t i = 1; i < n; ++i) map[i] = static_cast<int>(n - i);
  PatientGraph out;
  out.directed = g.directed;
  out.label = g.label;
  out.admission_id = g.admission_id;
  out.nodes.resize(n);
  for (size_t i = 0; i < n; ++i) {
    Node node = g.nodes[i];
    node.id = map[i];
    out.nodes[static_cast<size_t>(map[i])] = node;
  }
  for (const auto& e : g.edges) {
    out.edges.push_back({map[static_cast<size_t>(e.src)],
                         map[static_cast<size_t>(e.dst)]});
  }
  out.rebuild_adjacency();
  return out;
}

SageModel randomized_model(const std::vector<PatientGraph>& graphs,
                           TrainConfig cfg, uint64_t head_seed) {
  SageModel model = init_model(graphs, cfg);
  Rng rng(head_seed);
  for (double& v : model.head_w.value.data()) v = rng.uniform(-1.0, 1.0);
  model.head_b.value.at(0, 0) = rng.uniform(-0.5, 0.5);
  return model;
}

}  // namespace

TEST_CASE("embedding lookup") {
  Schema schema = default_schema(GraphVersion::V3);
  AdmissionRecord r = record("p", "a", 0, true);
  r.attrs["gender"] = "F";
  r.codes["disease"] = {"X1"};
  PatientGraph g = build_graph(r, 0, schema);

  EmbeddingTable table;
  table.vocab = {{"patient", 0}, {"gender:F", 1}, {"disease:X1", 2}};
  Matrix w(4, 2);
  for (size_t i = 0; i < 4; ++i) {
    w.at(i, 0) = static_cast<double>(i) + 0.25;
    w.at(i, 1) = -static_cast<double>(i);
  }
  table.weights = Param(w);

  Matrix feats = embed(g, table);
  REQUIRE_EQ(feats.rows(), 3);
  CHECK_EQ(feats.at(0, 0), 0.25);
  CHECK_EQ(feats.at(1, 0), 1.25);
  CHECK_EQ(feats.at(2, 0), 2.25);

  // unseen token falls into the UNK row
  g.nodes[2].token = "disease:UNSEEN";
  Matrix with_unk = embed(g, table);
  CHECK_EQ(with_unk.at(2, 0), 3.25);
  CHECK_EQ(table.row_for("nope"), table.unk_row());

  // shared tokens share rows
  g.nodes[1].token = "disease:X1";
  g.nodes[2].token = "disease:X1";
  Matrix shared = embed(g, table);
  CHECK_EQ(shared.at(1, 0), shared.at(2, 0));
  CHECK_EQ(shared.at(1, 1), shared.at(2, 1));
}

TEST_CASE("sage_forward block weights") {
  // star: patient 0 with four attribute nodes
  Schema schema = default_schema(GraphVersion::V3);
  AdmissionRecord r = record("p", "a", 0, true);
  r.attrs["gender"] = "F";
  r.attrs["race"] = "W";
  r.attrs["household"] = "ALONE";
  r.attrs["housing"] = "OWN";
  PatientGraph g = build_graph(r, 0, schema);
  REQUIRE_EQ(g.n_nodes(), 5);

  Matrix feats(5, 2);
  for (size_t i = 0; i < 5; ++i) {
    feats.at(i, 0) = 0.5 + static_cast<double>(i);
    feats.at(i, 1) = 2.0 * static_cast<double>(i) - 1.0;
  }

  SUBCASE("self-copy block is the identity") {
    Matrix w(4, 2);
    w.at(0, 0) = 1.0;
    w.at(1, 1) = 1.0;
    SageLayer layer{Param(w), Param(Matrix(1, 2))};
    CHECK_EQ(sage_forward(feats, g, layer, Activation::Linear), feats);
    // inputs are nonnegative in column 0 only; relu keeps positives
    Matrix relu_out = sage_forward(feats, g, layer, Activation::Relu);
    CHECK_EQ(relu_out.at(1, 1), 1.0);
    CHECK_EQ(relu_out.at(0, 1), 0.0);  // -1 clipped
  }

  SUBCASE("mean block averages the neighborhood") {
    Matrix w(4, 2);
    w.at(2, 0) = 1.0;
    w.at(3, 1) = 1.0;
    SageLayer layer{Param(w), Param(Matrix(1, 2))};
    Matrix out = sage_forward(feats, g, layer, Activation::Linear);
    // patient row = mean of the four attribute rows
    CHECK_EQ(out.at(0, 0), doctest::Approx(3.0).epsilon(1e-15));
    CHECK_EQ(out.at(0, 1), doctest::Approx(4.0).epsilon(1e-15));
    // attribute rows see only the patient
    for (size_t v = 1; v < 5; ++v) {
      CHECK_EQ(out.at(v, 0), feats.at(0, 0));
      CHECK_EQ(out.at(v, 1), feats.at(0, 1));
    }
  }

  SUBCASE("identical neighbor embeddings average to themselves exactly") {
    Matrix same(5, 2);
    for (size_t i = 0; i < 5; ++i) {
      same.at(i, 0) = 0.3125;
      same.at(i, 1) = -2.75;
    }
    Matrix w(4, 2);
    w.at(2, 0) = 1.0;
    w.at(3, 1) = 1.0;
    SageLayer layer{Param(w), Param(Matrix(1, 2))};
    Matrix out = sage_forward(same, g, layer, Activation::Linear);
    CHECK_EQ(out.at(0, 0), 0.3125);
    CHECK_EQ(out.at(0, 1), -2.75);
  }

  SUBCASE("bias is added") {
    Matrix w(4, 2);
    Matrix b(1, 2);
    b.at(0, 0) = 0.5;
    b.at(0, 1) = -0.25;
    SageLayer layer{Param(w), Param(b)};
    Matrix out = sage_forward(feats, g, layer, Activation::Linear);
    CHECK_EQ(out.at(3, 0), 0.5);
    CHECK_EQ(out.at(3, 1), -0.25);
  }

  SUBCASE("shape mismatches raise") {
    Matrix bad_w(3, 2);
    SageLayer layer{Param(bad_w), Param(Matrix(1, 2))};
    CHECK_EQ(code_of([&] {
               sage_forward(feats, g, layer, Activation::Linear);
             }),
             ErrorCode::Shape);
    Matrix short_feats(3, 2);
    Matrix ok_w(4, 2);
    SageLayer ok{Param(ok_w), Param(Matrix(1, 2))};
    CHECK_EQ(code_of([&] {
               sage_forward(short_feats, g, ok, Activation::Linear);
             }),
             ErrorCode::Shape);
  }
}

TEST_CASE("empty neighborhood contributes the zero vector") {
  Schema schema = default_schema(GraphVersion::V1);
  PatientGraph lone = build_graph(record("p", "a", 0, true), 0, schema);
  Matrix feats(1, 2);
  feats.at(0, 0) = 1.5;
  feats.at(0, 1) = -4.0;

  Matrix w(4, 2);
  w.at(0, 0) = 1.0;
  w.at(1, 1) = 1.0;  // self block only
  w.at(2, 0) = 9.0;
  w.at(3, 1) = 9.0;  // mean block sees zeros
  SageLayer layer{Param(w), Param(Matrix(1, 2))};
  CHECK_EQ(sage_forward(feats, lone, layer, Activation::Linear), feats);
}

TEST_CASE("fresh model predicts exactly one half") {
  for (GraphVersion v : {GraphVersion::V1, GraphVersion::V3}) {
    Schema schema = default_schema(v);
    std::vector<PatientGraph> graphs = {
        build_graph(small_record(0), 0, schema),
        build_graph(small_record(1), 1, schema)};
    TrainConfig cfg;
    cfg.d_embed = 4;
    cfg.d_hidden = 3;
    cfg.seed = 11;
    SageModel model = init_model(graphs, cfg);
    for (const auto& g : graphs) {
      CHECK_EQ(predict(model, g), 0.5);
    }
  }
}

TEST_CASE("gradients match finite differences") {
  for (GraphVersion version : {GraphVersion::V1, GraphVersion::V3}) {
    Schema schema = default_schema(version);
    for (uint64_t trial = 0; trial < 3; ++trial) {
      PatientGraph g = build_graph(small_record(static_cast<int>(trial)),
                                   trial % 2 ? 1 : 0, schema);
      TrainConfig cfg;
      cfg.d_embed = 4;
      cfg.d_hidden = 3;
      cfg.n_layers = 2;
      cfg.seed = 100 + trial;
      SageModel model = randomized_model({g}, cfg, 500 + trial);

      const double weight = trial == 2 ? 2.5 : 1.0;
      for (Param* p : model.params()) p->zero_grad();
      forward_backward(model, g, weight);
      for (Param* p : model.params()) {
        const double err = finite_diff_check(
            [&] { return loss_for_graph(model, g, weight); }, *p);
        CHECK(err < 1e-4);
      }
    }
  }
}

TEST_CASE("forward_backward returns the plain loss") {
  Schema schema = default_schema(GraphVersion::V3);
  PatientGraph g = build_graph(small_record(1), 1, schema);
  TrainConfig cfg;
  cfg.d_embed = 4;
  cfg.d_hidden = 3;
  cfg.seed = 3;
  SageModel model = randomized_model({g}, cfg, 77);
  const double expected = loss_for_graph(model, g, 1.5);
  CHECK_EQ(forward_backward(model, g, 1.5), expected);
}

TEST_CASE("prediction is invariant under attribute permutation") {
  for (GraphVersion version : {GraphVersion::V1, GraphVersion::V3}) {
    Schema schema = default_schema(version);
    PatientGraph g = build_graph(small_record(1), 1, schema);
    TrainConfig cfg;
    cfg.d_embed = 6;
    cfg.d_hidden = 5;
    cfg.seed = 21;
    SageModel model = randomized_model({g}, cfg, 99);

    PatientGraph shuffled = permute_attributes(g);
    REQUIRE_EQ(shuffled.n_nodes(), g.n_nodes());
    CHECK_EQ(predict(model, shuffled),
             doctest::Approx(predict(model, g)).epsilon(1e-12));
  }
}

TEST_CASE("masking an absent facet leaves predictions untouched") {
  Schema schema = default_schema(GraphVersion::V3);
  AdmissionRecord r = record("p", "a", 0, true);
  r.attrs["gender"] = "F";  // no clinical codes at all
  FacetMask mask;
  mask.excluded_facets = {"disease", "procedure"};

  PatientGraph bare = build_graph(r, 0, schema);
  PatientGraph masked = build_graph(r, 0, schema, mask);
  TrainConfig cfg;
  cfg.d_embed = 4;
  cfg.d_hidden = 3;
  cfg.seed = 5;
  SageModel model = randomized_model({bare}, cfg, 17);
  CHECK_EQ(predict(model, masked), predict(model, bare));
}

TEST_CASE("stratified split") {
  TrainConfig cfg;
  cfg.seed = 40;

  SUBCASE("single class of 10 splits 7/1/2") {
    std::vector<PatientGraph> graphs = separable_graphs(20, GraphVersion::V3);
    graphs.resize(10);
    for (auto& g : graphs) g.label = 0;
    auto splits = stratified_split(graphs, cfg);
    CHECK_EQ(splits[0].size(), 7);
    CHECK_EQ(splits[1].size(), 1);
    CHECK_EQ(splits[2].size(), 2);
  }

  SUBCASE("two balanced classes split per class") {
    std::vector<PatientGraph> graphs = separable_graphs(20, GraphVersion::V3);
    auto splits = stratified_split(graphs, cfg);
    CHECK_EQ(splits[0].size(), 14);
    CHECK_EQ(splits[1].size(), 2);
    CHECK_EQ(splits[2].size(), 4);

    // disjoint cover of all indices
    std::vector<bool> seen(graphs.size(), false);
    for (const auto& part : splits) {
      for (size_t i : part) {
        CHECK_FALSE(seen[i]);
        seen[i] = true;
      }
      CHECK(std::is_sorted(part.begin(), part.end()));
    }
    for (bool s : seen) CHECK(s);

    // each part is half positive
    for (const auto& part : splits) {
      size_t pos = 0;
      for (size_t i : part) pos += graphs[i].label;
      CHECK_EQ(pos * 2, part.size());
    }

    auto again = stratified_split(graphs, cfg);
    CHECK_EQ(again, splits);
    TrainConfig other = cfg;
    other.seed = 41;
    CHECK_NE(stratified_split(graphs, other), splits);
  }
}

TEST_CASE("training validation") {
  std::vector<PatientGraph> graphs = separable_graphs(9, GraphVersion::V3);
  TrainConfig cfg;
  CHECK_EQ(code_of([&] { train(graphs, cfg); }), ErrorCode::InvalidInput);

  std::vector<PatientGraph> one_class = separable_graphs(12, GraphVersion::V3);
  for (auto& g : one_class) g.label = 0;
  CHECK_EQ(code_of([&] { train(one_class, cfg); }),
           ErrorCode::DegenerateSplit);

  // a lone positive never reaches the training split
  std::vector<PatientGraph> lone_pos = separable_graphs(13, GraphVersion::V3);
  for (size_t i = 0; i < lone_pos.size(); ++i) lone_pos[i].label = i == 0;
  CHECK_EQ(code_of([&] { train(lone_pos, cfg); }), ErrorCode::DegenerateSplit);
}

TEST_CASE("zero epochs leaves the majority-rule model") {
  std::vector<PatientGraph> graphs = separable_graphs(40, GraphVersion::V3);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 9;
  cfg.d_embed = 4;
  cfg.d_hidden = 4;
  TrainResult result = train(graphs, cfg);
  CHECK(result.history.empty());

  // 0.5 >= threshold, so everything is predicted positive
  auto splits = stratified_split(graphs, cfg);
  size_t pos = 0;
  for (size_t i : splits[2]) pos += graphs[i].label;
  const double pos_rate =
      static_cast<double>(pos) / static_cast<double>(splits[2].size());
  CHECK_EQ(result.test.accuracy, doctest::Approx(pos_rate).epsilon(1e-12));
  CHECK_EQ(result.test.recall, 1.0);
  for (const auto& g : graphs) CHECK_EQ(predict(result.model, g), 0.5);
}

TEST_CASE("separable signal trains to high accuracy") {
  std::vector<PatientGraph> graphs = separable_graphs(60, GraphVersion::V3);
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.lr = 0.05;
  cfg.d_embed = 8;
  cfg.d_hidden = 8;
  cfg.seed = 7;
  TrainResult result = train(graphs, cfg);
  CHECK(result.test.accuracy > 0.9);
  CHECK_EQ(result.history.size(), 25);
  // losses fall over training
  CHECK(result.history.back().train_loss <
        result.history.front().train_loss);
}

TEST_CASE("training is deterministic") {
  std::vector<PatientGraph> graphs = separable_graphs(30, GraphVersion::V1);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.lr = 0.02;
  cfg.d_embed = 6;
  cfg.d_hidden = 6;
  cfg.seed = 123;

  TrainResult a = train(graphs, cfg);
  TrainResult b = train(graphs, cfg);
  REQUIRE_EQ(a.history.size(), b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK_EQ(a.history[i].train_loss, b.history[i].train_loss);
    CHECK_EQ(a.history[i].val, b.history[i].val);
  }
  CHECK_EQ(a.test, b.test);
  CHECK_EQ(model_to_json(a.model), model_to_json(b.model));

  TrainConfig other = cfg;
  other.seed = 124;
  TrainResult c = train(graphs, other);
  CHECK_NE(model_to_json(c.model), model_to_json(a.model));
}

TEST_CASE("early stopping cuts the history short") {
  // labels are noise, so validation f1 cannot keep strictly improving
  std::vector<PatientGraph> graphs = separable_graphs(40, GraphVersion::V3);
  Rng rng(404);
  for (auto& g : graphs) g.label = rng.bernoulli(0.5) ? 1 : 0;
  bool has_pos = false, has_neg = false;
  for (auto& g : graphs) (g.label ? has_pos : has_neg) = true;
  REQUIRE(has_pos);
  REQUIRE(has_neg);

  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 0.01;
  cfg.d_embed = 4;
  cfg.d_hidden = 4;
  cfg.seed = 2;
  cfg.early_stopping = true;
  cfg.patience = 2;
  TrainResult result = train(graphs, cfg);
  CHECK(result.history.size() < 60);
  // test metrics still reported after the early exit
  CHECK(result.test.tp + result.test.fp + result.test.tn + result.test.fn > 0);
}

TEST_CASE("class weighting trains") {
  std::vector<PatientGraph> graphs = separable_graphs(40, GraphVersion::V3);
  // unbalance: flip most positives' labels to negative, keep signal afterwards
  for (size_t i = 0; i < graphs.size(); ++i) graphs[i].label = i % 4 == 0;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 31;
  cfg.d_embed = 4;
  cfg.d_hidden = 4;
  cfg.class_weighting = true;
  TrainResult result = train(graphs, cfg);
  CHECK_EQ(result.history.size(), 5);
  for (const auto& h : result.history) CHECK(std::isfinite(h.train_loss));
}

TEST_CASE("evaluate") {
  Schema schema = default_schema(GraphVersion::V3);
  std::vector<PatientGraph> graphs;
  for (int i = 0; i < 4; ++i) {
    graphs.push_back(build_graph(small_record(i), i < 2 ? 1 : 0, schema));
  }
  TrainConfig cfg;
  cfg.d_embed = 4;
  cfg.d_hidden = 3;
  SageModel fresh = init_model(graphs, cfg);

  // 0.5 everywhere with the >= rule: everything positive
  Metrics m = evaluate(fresh, graphs, 0.5);
  CHECK_EQ(m.tp, 2);
  CHECK_EQ(m.fp, 2);
  CHECK_EQ(m.accuracy, 0.5);
  CHECK_EQ(m.recall, 1.0);

  // a threshold above 0.5 flips everything negative
  Metrics none = evaluate(fresh, graphs, 0.6);
  CHECK_EQ(none.tp, 0);
  CHECK_EQ(none.tn, 2);

  CHECK_EQ(code_of([&] { evaluate(fresh, {}, 0.5); }),
           ErrorCode::EmptyEvaluation);
}

TEST_CASE("model json round trip reproduces predictions") {
  std::vector<PatientGraph> graphs = separable_graphs(20, GraphVersion::V3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.d_embed = 5;
  cfg.d_hidden = 4;
  cfg.seed = 77;
  TrainResult result = train(graphs, cfg);

  SageModel loaded = model_from_json(model_to_json(result.model));
  CHECK_EQ(loaded.embeddings.vocab, result.model.embeddings.vocab);
  CHECK_EQ(loaded.config, result.model.config);
  REQUIRE_EQ(loaded.layers.size(), result.model.layers.size());
  for (const auto& g : graphs) {
    CHECK_EQ(predict(loaded, g),
             doctest::Approx(predict(result.model, g)).epsilon(1e-12));
  }

  CHECK_EQ(code_of([] { model_from_json("{\"format\":\"other\"}"); }),
           ErrorCode::Parse);
  CHECK_EQ(code_of([] { model_from_json("not json"); }), ErrorCode::Parse);
}

TEST_CASE("train config json and validation") {
  TrainConfig cfg;
  cfg.d_embed = 12;
  cfg.lr = 0.007;
  cfg.seed = 99;
  cfg.split = {0.6, 0.2, 0.2};
  cfg.class_weighting = true;
  CHECK_EQ(TrainConfig::from_json(cfg.to_json()), cfg);

  CHECK_EQ(TrainConfig::from_json("{}"), TrainConfig{});

  CHECK_EQ(code_of([] { TrainConfig::from_json("{\"split\": [0.5, 0.5]}"); }),
           ErrorCode::Parse);
  CHECK_EQ(code_of([] {
             TrainConfig::from_json("{\"split\": [0.5, 0.4, 0.2]}");
           }),
           ErrorCode::InvalidInput);
  CHECK_EQ(code_of([] { TrainConfig::from_json("{\"lr\": 0}"); }),
           ErrorCode::InvalidInput);
  CHECK_EQ(code_of([] { TrainConfig::from_json("{\"d_embed\": 0}"); }),
           ErrorCode::InvalidInput);
  CHECK_EQ(code_of([] { TrainConfig::from_json("{\"epochs\": -1}"); }),
           ErrorCode::InvalidInput);
}
