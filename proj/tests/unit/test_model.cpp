/**
 * Copyright 2026 The himrae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "himrae/batch.hpp"
#include "himrae/data.hpp"
#include "himrae/errors.hpp"
#include "himrae/graph_complexity.hpp"
#include "himrae/model.hpp"

using namespace himrae;
using himrae::testing::check_gradients;
using himrae::testing::random_tensor;

namespace {

ModelConfig small_model(std::uint64_t seed = 0) {
  ModelConfig c;
  c.hidden = 6;
  c.edge_dim = 5;
  c.init_seed = seed;
  return c;
}

std::vector<Scene> scenes(std::size_t n, std::uint64_t seed) {
  SyntheticConfig c;
  c.n_scenes = n;
  c.seed = seed;
  return generate_synthetic(c).scenes;
}

void zero_params(ParamStore& store, const std::string& prefix) {
  for (const auto& k : store.keys())
    if (k.rfind(prefix, 0) == 0) {
      Tensor t = store.get(k);
      for (double& v : t.mutable_values()) v = 0.0;
    }
}

GraphSample hard_graph(const GraphLayout& layout, const std::vector<double>& z, std::size_t d, RngStream& rng) {
  GraphSample g;
  g.z = Tensor::from({z.size(), 1}, z);
  g.probs = g.z;
  g.logits = Tensor::zeros({z.size(), 1});
  g.edge_embedding = random_tensor({layout.num_edges(), d}, rng, 1.0, false);
  g.edge_features = g.edge_embedding;
  return g;
}

}  // namespace

TEST_CASE("window embedding has one H-wide row per agent") {
  ModelConfig c;
  Model m(c);
  RngStream rng(1, 0);
  const Tensor v = m.encoder().embed(random_tensor({3, 10}, rng, 1.0, false), false);
  CHECK(v.shape() == Shape{3, 128});
  CHECK_THROWS_AS(m.encoder().embed(Tensor::zeros({3, 8}), false), ShapeError);
}

TEST_CASE("identical trajectories give identical embeddings and constant edge embeddings") {
  Model m(small_model());
  std::vector<double> w(4 * 10);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 10; ++k) w[i * 10 + k] = 0.1 * static_cast<double>(k);
  const Tensor v = m.encoder().embed(Tensor::from({4, 10}, w), false);
  for (std::size_t i = 1; i < 4; ++i)
    for (std::size_t k = 0; k < 6; ++k) CHECK(v.at(i, k) == v.at(0, k));
  const auto layout = GraphLayout::build(std::vector<std::size_t>{4});
  const auto [vt, et] = m.encoder().gnn_pass(v, layout, false);
  for (std::size_t e = 1; e < layout.num_edges(); ++e)
    for (std::size_t k = 0; k < 5; ++k) CHECK(et.at(e, k) == et.at(0, k));
}

TEST_CASE("window features are out of range past the available steps") {
  std::vector<Tensor> steps(7, Tensor::zeros({2, 2}));
  CHECK(window_features(steps, 2, 5).shape() == Shape{2, 10});
  CHECK_THROWS_AS(window_features(steps, 3, 5), ContractError);
}

TEST_CASE("edge feature noise") {
  RngStream rng(2, 0);
  const Tensor emb = random_tensor({50, 4}, rng, 1.0, false);
  const Tensor same = Encoder::sample_edge_features(emb, rng, false);
  for (std::size_t k = 0; k < emb.size(); ++k) CHECK(same[k] == emb[k]);

  double sum = 0.0;
  const std::size_t draws = 10000;
  const Tensor one = Tensor::zeros({1, 1});
  for (std::size_t s = 0; s < draws; ++s) sum += Encoder::sample_edge_features(one, rng, true)[0];
  CHECK(std::abs(sum / draws) < 3.0 / 100.0);

  RngStream a(3, 0), b(3, 0);
  const Tensor x = Encoder::sample_edge_features(emb, a, true);
  const Tensor y = Encoder::sample_edge_features(emb, b, true);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(x[k] == y[k]);
}

TEST_CASE("relation update with zero input, zero state and zero biases gives zero logits") {
  Model m(small_model());
  zero_params(m.params(), "enc.gru");
  zero_params(m.params(), "enc.f_proj.2.");
  const auto layout = GraphLayout::build(std::vector<std::size_t>{3});
  const auto state = m.encoder().initial_state(layout);
  const auto [logits, next] = m.encoder().update_relations(Tensor::zeros({6, 5}), state, false);
  for (double v : logits.values()) CHECK(v == 0.0);
  for (double v : next.hidden.back().values()) CHECK(v == 0.0);
}

TEST_CASE("relation sampling") {
  RngStream rng(4, 0);
  SUBCASE("logit 0 without logistic noise gives one half at any temperature") {
    for (double t : {0.1, 0.5, 3.0}) {
      CHECK(Encoder::sample_relations(Tensor::zeros({1, 1}), t, Mode::kTrain, rng, false)[0] == 0.5);
    }
  }
  SUBCASE("low temperature concentrates on the Bernoulli outcome") {
    const std::size_t draws = 10000;
    std::size_t high = 0;
    const Tensor l = Tensor::full({1, 1}, 5.0);
    for (std::size_t s = 0; s < draws; ++s)
      high += Encoder::sample_relations(l, 0.01, Mode::kTrain, rng, true)[0] > 0.99 ? 1 : 0;
    CHECK(std::abs(static_cast<double>(high) / draws - 1.0 / (1.0 + std::exp(-5.0))) < 0.02);
  }
  SUBCASE("train-mode mean matches an independent Monte-Carlo estimate") {
    const std::size_t draws = 100000;
    for (double logit : {-1.5, 0.3, 2.0}) {
      std::vector<double> l(draws, logit);
      const Tensor z = Encoder::sample_relations(Tensor::from({draws, 1}, l), 0.5, Mode::kTrain, rng, true);
      double mean = 0.0;
      for (double v : z.values()) mean += v;
      mean /= draws;
      RngStream oracle(99, 7);
      double ref = 0.0;
      for (std::size_t s = 0; s < draws; ++s) {
        const double u = oracle.uniform();
        const double g = std::log(u) - std::log1p(-u);
        ref += 1.0 / (1.0 + std::exp(-(logit + g) / 0.5));
      }
      ref /= draws;
      CHECK(std::abs(mean - ref) < 0.01);
    }
  }
  SUBCASE("test mode draws Bernoulli(sigmoid(logit))") {
    const std::size_t draws = 20000;
    std::vector<double> l(draws, 0.8);
    const Tensor z = Encoder::sample_relations(Tensor::from({draws, 1}, l), 0.5, Mode::kTest, rng, true);
    double ones = 0.0;
    for (double v : z.values()) {
      CHECK((v == 0.0 || v == 1.0));
      ones += v;
    }
    const double p = 1.0 / (1.0 + std::exp(-0.8));
    CHECK(std::abs(ones / draws - p) < 3.0 * std::sqrt(p * (1 - p) / draws) + 1e-3);
    const Tensor t = Encoder::sample_relations(Tensor::from({2, 1}, {0.1, -0.1}), 0.5, Mode::kTest, rng, false);
    CHECK(t[0] == 1.0);
    CHECK(t[1] == 0.0);
  }
  SUBCASE("non-positive temperature is a config error") {
    CHECK_THROWS_AS(Encoder::sample_relations(Tensor::zeros({1, 1}), 0.0, Mode::kTrain, rng, true), ConfigError);
  }
}

TEST_CASE("attention with a single in-edge puts full weight on it") {
  Model m(small_model(5));
  const auto sc = scenes(1, 5);
  const Batch batch = Batch::from_scene(sc[0], 3);
  RngStream rng(5, 1);
  const auto& layout = batch.layout;
  std::vector<double> z(layout.num_edges(), 0.0);
  z[layout.edge_index(0, 1, 0)] = 1.0;
  const GraphSample g = hard_graph(layout, z, 5, rng);
  const Tensor h = random_tensor({batch.num_nodes(), 6}, rng, 1.0, false);
  std::vector<double> w;
  const Tensor msg = m.decoder().ham_aggregate(h, batch, g, &w);
  CHECK(w[layout.edge_index(0, 1, 0)] == 1.0);
  for (std::size_t j = 1; j < batch.num_nodes(); ++j)
    for (std::size_t k = 0; k < 6; ++k) CHECK(msg.at(j, k) == 0.0);
  // The message of a single in-edge does not depend on the attention scores.
  zero_params(m.params(), "dec.f_q");
  const Tensor again = m.decoder().ham_aggregate(h, batch, g);
  for (std::size_t k = 0; k < 6; ++k) CHECK(again.at(0, k) == msg.at(0, k));
}

TEST_CASE("attention weights are normalised over qualifying in-edges") {
  Model m(small_model(6));
  const auto sc = scenes(2, 6);
  const Batch batch = Batch::from_scenes({&sc[0], &sc[1]}, 3);
  RngStream rng(6, 1);
  std::vector<double> z(batch.layout.num_edges());
  for (double& v : z) v = rng.uniform();
  const GraphSample g = hard_graph(batch.layout, z, 5, rng);
  std::vector<double> w;
  m.decoder().ham_aggregate(random_tensor({batch.num_nodes(), 6}, rng, 1.0, false), batch, g, &w);
  std::vector<double> total(batch.num_nodes(), 0.0);
  std::vector<bool> has(batch.num_nodes(), false);
  for (std::size_t e = 0; e < z.size(); ++e) {
    if (z[e] > 0.5) has[batch.layout.dst[e]] = true;
    else CHECK(w[e] == 0.0);
    total[batch.layout.dst[e]] += w[e];
  }
  for (std::size_t j = 0; j < total.size(); ++j) CHECK(total[j] == doctest::Approx(has[j] ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("zero-increment decoder") {
  Model m(small_model(7));
  m.decoder().zero_output_layer();
  const auto sc = scenes(2, 7);
  const Batch batch = Batch::from_scenes({&sc[0], &sc[1]}, 3);
  RngStream rng(7, 1);
  auto state = m.decoder().initial_state(batch.num_nodes());
  const Tensor x = random_tensor({batch.num_nodes(), 2}, rng, 1.0, false);
  const Tensor mu = m.decoder().step(state, Tensor::zeros({batch.num_nodes(), 6}), x, batch, Tensor());
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(mu[k] == x[k]);

  RolloutOptions ro;
  ro.mode = Mode::kTest;
  ro.encoder_from_truth = false;
  const auto r = m.rollout(batch, ro, rng);
  for (std::size_t t = 5; t < 15; ++t)
    for (std::size_t k = 0; k < batch.truth[4].size(); ++k) CHECK(r.predictions[t][k] == batch.truth[4][k]);
}

TEST_CASE("decoder step is deterministic without noise") {
  Model m(small_model(8));
  const auto sc = scenes(1, 8);
  const Batch batch = Batch::from_scene(sc[0], 3);
  RngStream rng(8, 1);
  const Tensor x = random_tensor({batch.num_nodes(), 2}, rng, 1.0, false);
  const Tensor msg = random_tensor({batch.num_nodes(), 6}, rng, 1.0, false);
  auto s1 = m.decoder().initial_state(batch.num_nodes());
  auto s2 = s1;
  const Tensor a = m.decoder().step(s1, msg, x, batch, Tensor());
  const Tensor b = m.decoder().step(s2, msg, x, batch, Tensor());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("rollout contracts") {
  Model m(small_model(9));
  const auto sc = scenes(1, 9);
  const Batch batch = Batch::from_scene(sc[0], 3);
  RngStream rng(9, 1);
  const std::vector<GraphSample> one{m.encode_truth(batch, Mode::kTrain, rng).front()};
  RolloutOptions ro;
  ro.graphs = &one;
  CHECK_THROWS_AS(m.rollout(batch, ro, rng), ContractError);
  RolloutOptions mix;
  mix.policy = InputPolicy::kMixup;
  CHECK_THROWS_AS(m.rollout(batch, mix, rng), ContractError);
  CHECK(m.graphs_needed() == 2);
  CHECK(m.boundary_steps() == std::vector<std::size_t>{9});
}

TEST_CASE("teacher-forced inputs equal the truth at every step") {
  Model m(small_model(10));
  const auto sc = scenes(1, 10);
  const Batch batch = Batch::from_scene(sc[0], 3);
  RngStream rng(10, 1);
  RolloutOptions ro;
  ro.policy = InputPolicy::kTeacherForcing;
  const auto r = m.rollout(batch, ro, rng);
  for (std::size_t t = 0; t + 1 < batch.steps; ++t)
    for (std::size_t k = 0; k < r.inputs[t].size(); ++k) CHECK(r.inputs[t][k] == batch.truth[t][k]);
  ro.policy = InputPolicy::kTeacherForcingPlus;
  const auto p = m.rollout(batch, ro, rng);
  for (std::size_t k = 0; k < p.inputs[9].size(); ++k) CHECK(p.inputs[9][k] == batch.truth[9][k]);
  for (std::size_t k = 0; k < p.inputs[7].size(); ++k) CHECK(p.inputs[7][k] == p.predictions[7][k]);
}

TEST_CASE("encoder and decoder gradients match central differences") {
  Model m(small_model(11));
  const auto sc = scenes(2, 11);
  const Batch batch = Batch::from_scenes({&sc[0], &sc[1]}, 3);
  std::vector<Tensor> leaves;
  for (const auto& k : m.params().param_keys()) leaves.push_back(m.params().get(k));
  RngStream probe(11, 2);
  auto loss = [&] {
    RngStream rng(11, 3);
    const auto r = m.rollout(batch, RolloutOptions{}, rng);
    Tensor acc = entropy_per_scene(r.graphs[1].z, batch.layout);
    for (std::size_t t = 5; t < 15; ++t) acc = ops::add(ops::sum_squares(r.predictions[t]), ops::sum(acc));
    return ops::sum(acc);
  };
  CHECK(check_gradients(loss, leaves, 40, probe).max_rel_error < 1e-4);
}

TEST_CASE("records round trip restores every parameter") {
  Model a(small_model(12));
  const auto rec = a.records();
  const ModelConfig cfg = Model::config_from_records(rec);
  CHECK(cfg.hidden == 6);
  CHECK(cfg.edge_dim == 5);
  ModelConfig other = small_model(99);
  Model b(other);
  b.load_records(rec);
  for (const auto& k : a.params().keys()) {
    const auto x = a.params().get(k).values();
    const auto y = b.params().get(k).values();
    CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
  Model wrong([] {
    ModelConfig c = small_model();
    c.hidden = 7;
    return c;
  }());
  CHECK_THROWS_AS(wrong.load_records(rec), DataError);
}

TEST_CASE("category modules") {
  Model het(small_model());
  CHECK(het.decoder().category_module_count() == 12);
  ModelConfig c = small_model();
  c.homogeneous = true;
  Model hom(c);
  CHECK(hom.decoder().category_module_count() == 3);
  CHECK(hom.params().param_count() < het.params().param_count());
}
