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

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "himrae/graph_layout.hpp"
#include "himrae/model_config.hpp"
#include "himrae/nn.hpp"
#include "himrae/rng.hpp"
#include "himrae/tensor.hpp"

namespace himrae {

/// Edge GRU hidden states, one [E x H] tensor per layer. Zeros at scene start.
struct EncoderState {
  std::vector<Tensor> hidden;
};

/// Inferred graph of one window over the edges of a GraphLayout. Edge e is
/// the ordered pair (layout.src[e], layout.dst[e]); self-pairs are never
/// represented, so diagonals are zero by construction.
struct GraphSample {
  Tensor logits;         // [E x 1]
  Tensor probs;          // [E x 1], sigmoid(logits)
  Tensor z;              // [E x 1], relaxed in train mode, {0, 1} in test mode
  Tensor edge_embedding; // [E x D], E~
  Tensor edge_features;  // [E x D], E~ + noise
};

/// Flattens steps [begin, begin + tau) of per-step positions [nodes x 2]
/// into per-agent rows of 2 tau features (x_1, y_1, x_2, y_2, ...).
Tensor window_features(const std::vector<Tensor>& steps, std::size_t begin, std::size_t tau);

class Encoder {
 public:
  Encoder() = default;
  Encoder(ParamStore& store, const ModelConfig& config, RngStream& init);

  /// f_emb over [nodes x 2 tau] window features -> V [nodes x H].
  Tensor embed(const Tensor& window, bool training) const;

  /// Two message passes over the complete directed graph of each scene:
  ///   V~_j = f_v(sum_{i != j} f_e(V_i - V_j)),  E~_ij = f~_e(V~_i - V~_j).
  std::pair<Tensor, Tensor> gnn_pass(const Tensor& v, const GraphLayout& layout, bool training) const;

  /// E = E~ + N(0, I); the identity when `noise` is false.
  static Tensor sample_edge_features(const Tensor& embedding, RngStream& rng, bool noise);

  /// r = GRU(E~, r_prev); logits = f_proj(r).
  std::pair<Tensor, EncoderState> update_relations(const Tensor& embedding, const EncoderState& state,
                                                   bool training) const;

  /// Train: z = sigmoid((logit + ln d - ln(1 - d)) / T), d ~ U(0, 1).
  /// Test: z ~ Bernoulli(sigmoid(logit)).
  /// Without noise the logistic term is 0 (train) and test mode thresholds
  /// sigmoid(logit) > 1/2. Throws ConfigError when T <= 0.
  static Tensor sample_relations(const Tensor& logits, double temperature, Mode mode, RngStream& rng, bool noise);

  EncoderState initial_state(const GraphLayout& layout) const;

  /// Full window inference.
  GraphSample encode(const Tensor& window, const GraphLayout& layout, EncoderState& state, Mode mode,
                     RngStream& rng) const;

 private:
  ModelConfig config_;
  Mlp f_emb_, f_e_, f_v_, f_e_tilde_, f_proj_;
  GruStack gru_;
};

}  // namespace himrae
