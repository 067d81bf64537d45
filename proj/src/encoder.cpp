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

#include "himrae/encoder.hpp"

#include <cmath>

#include "himrae/errors.hpp"

namespace himrae {

Tensor window_features(const std::vector<Tensor>& steps, std::size_t begin, std::size_t tau) {
  if (tau == 0 || begin + tau > steps.size()) {
    throw ContractError("window [" + std::to_string(begin) + ", " + std::to_string(begin + tau) +
                        ") outside the available " + std::to_string(steps.size()) + " steps");
  }
  std::vector<Tensor> parts(steps.begin() + static_cast<std::ptrdiff_t>(begin),
                            steps.begin() + static_cast<std::ptrdiff_t>(begin + tau));
  return ops::concat_cols(parts);
}

Encoder::Encoder(ParamStore& store, const ModelConfig& config, RngStream& init) : config_(config) {
  const std::size_t h = config.hidden, d = config.edge_dim;
  f_emb_ = Mlp(store, "enc.f_emb", 2 * config.tau, elu_bn_blocks(h), init);
  f_e_ = Mlp(store, "enc.f_e", h, elu_bn_blocks(h), init);
  f_v_ = Mlp(store, "enc.f_v", h, elu_bn_blocks(h), init);
  f_e_tilde_ = Mlp(store, "enc.f_e_tilde", h, elu_bn_blocks(d), init);
  gru_ = GruStack(store, "enc.gru", d, h, config.gru_layers, init);
  auto proj = elu_bn_blocks(h);
  proj.push_back({1, Activation::kNone, false});
  f_proj_ = Mlp(store, "enc.f_proj", h, std::move(proj), init);
}

Tensor Encoder::embed(const Tensor& window, bool training) const {
  if (window.rank() != 2 || window.cols() != 2 * config_.tau) {
    throw ShapeError("embed: expected [N x " + std::to_string(2 * config_.tau) + "], got " + shape_str(window.shape()));
  }
  return f_emb_.forward(window, training);
}

std::pair<Tensor, Tensor> Encoder::gnn_pass(const Tensor& v, const GraphLayout& layout, bool training) const {
  if (v.rows() != layout.num_nodes) throw ShapeError("gnn_pass: node count differs from layout");
  for (std::size_t n : layout.scene_size)
    if (n < 2) throw ContractError("gnn_pass: every scene needs N >= 2");
  const Tensor diff = ops::sub(ops::gather_rows(v, layout.src), ops::gather_rows(v, layout.dst));
  const Tensor messages = f_e_.forward(diff, training);
  const Tensor v_tilde = f_v_.forward(ops::scatter_add_rows(messages, layout.dst, layout.num_nodes), training);
  const Tensor pair = ops::sub(ops::gather_rows(v_tilde, layout.src), ops::gather_rows(v_tilde, layout.dst));
  return {v_tilde, f_e_tilde_.forward(pair, training)};
}

Tensor Encoder::sample_edge_features(const Tensor& embedding, RngStream& rng, bool noise) {
  if (!noise) return embedding;
  std::vector<double> eps(embedding.size());
  for (double& e : eps) e = rng.normal();
  return ops::add(embedding, Tensor::from(embedding.shape(), std::move(eps)));
}

std::pair<Tensor, EncoderState> Encoder::update_relations(const Tensor& embedding, const EncoderState& state,
                                                          bool training) const {
  EncoderState next{gru_.forward(embedding, state.hidden)};
  Tensor logits = f_proj_.forward(next.hidden.back(), training);
  return {logits, std::move(next)};
}

Tensor Encoder::sample_relations(const Tensor& logits, double temperature, Mode mode, RngStream& rng, bool noise) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (mode == Mode::kTrain) {
    Tensor shifted = logits;
    if (noise) {
      std::vector<double> g(logits.size());
      for (double& v : g) v = rng.logistic();
      shifted = ops::add(logits, Tensor::from(logits.shape(), std::move(g)));
    }
    return ops::sigmoid(ops::scale(shifted, 1.0 / temperature));
  }
  std::vector<double> hard(logits.size());
  for (std::size_t k = 0; k < hard.size(); ++k) {
    const double p = 1.0 / (1.0 + std::exp(-logits[k]));
    hard[k] = noise ? (rng.bernoulli(p) ? 1.0 : 0.0) : (p > 0.5 ? 1.0 : 0.0);
  }
  return Tensor::from(logits.shape(), std::move(hard));
}

EncoderState Encoder::initial_state(const GraphLayout& layout) const {
  return EncoderState{gru_.initial_state(layout.num_edges())};
}

GraphSample Encoder::encode(const Tensor& window, const GraphLayout& layout, EncoderState& state, Mode mode,
                            RngStream& rng) const {
  const bool training = mode == Mode::kTrain;
  if (state.hidden.empty()) state = initial_state(layout);
  GraphSample g;
  auto [v_tilde, e_tilde] = gnn_pass(embed(window, training), layout, training);
  (void)v_tilde;
  g.edge_embedding = e_tilde;
  g.edge_features = sample_edge_features(e_tilde, rng, config_.edge_noise);
  auto [logits, next] = update_relations(e_tilde, state, training);
  state = std::move(next);
  g.logits = logits;
  g.probs = ops::sigmoid(logits);
  g.z = sample_relations(logits, config_.temperature, mode, rng, config_.relation_noise);
  return g;
}

}  // namespace himrae
