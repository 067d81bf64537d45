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
#include <vector>

#include "himrae/batch.hpp"
#include "himrae/encoder.hpp"
#include "himrae/model_config.hpp"
#include "himrae/nn.hpp"
#include "himrae/tensor.hpp"

namespace himrae {

/// Decoder hidden state, one [nodes x H] tensor per GRU layer.
struct DecoderState {
  std::vector<Tensor> hidden;
};

class Decoder {
 public:
  Decoder() = default;
  Decoder(ParamStore& store, const ModelConfig& config, RngStream& init);

  DecoderState initial_state(std::size_t nodes) const;

  /// Heterogeneous attention over the edges of `graph` with z > 1/2:
  ///   a_ij = f_Q([g_Q^{c_i}(h_i), e_ij]) . f_K([g_K^{c_j}(h_j), e_ij]) / sqrt(D)
  ///   alpha_ij = z_ij exp(a_ij) / sum_{i': z_i'j > 1/2} z_i'j exp(a_i'j)
  ///   m_j = sum_i alpha_ij f_V([g_V^{c_i}(h_i) - g_V^{c_j}(h_j), e_ij])
  /// Targets without a qualifying in-edge get m_j = 0. When `weights` is
  /// given it receives alpha per edge of the layout (0 for excluded edges).
  Tensor ham_aggregate(const Tensor& h, const Batch& batch, const GraphSample& graph,
                       std::vector<double>* weights = nullptr) const;

  /// h' = GRU_{c_j}([m_j, x_j], h_j); mu = x + f_out(h'_top + eps).
  /// `eps` may be undefined (no output noise).
  Tensor step(DecoderState& state, const Tensor& m, const Tensor& x, const Batch& batch, const Tensor& eps) const;

  /// Zeroes the last affine layer of f_out: mu = x for every input.
  void zero_output_layer() { f_out_.zero_last_layer(); }

  std::size_t category_module_count() const { return g_q_.size() + g_k_.size() + g_v_.size() + grus_.size(); }

 private:
  Tensor by_category(const std::vector<Linear>& maps, const Tensor& x, const Batch& batch) const;

  ModelConfig config_;
  std::vector<Linear> g_q_, g_k_, g_v_;
  std::vector<GruStack> grus_;
  Mlp f_q_, f_k_, f_v_, f_out_;
};

}  // namespace himrae
