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

#include "himrae/decoder.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "himrae/errors.hpp"

namespace himrae {

Decoder::Decoder(ParamStore& store, const ModelConfig& config, RngStream& init) : config_(config) {
  const std::size_t h = config.hidden, d = config.edge_dim;
  for (int c = 0; c < config.categories; ++c) {
    const std::string tag = std::to_string(c);
    if (!config.homogeneous) {
      g_q_.emplace_back(store, "dec.g_q." + tag, h, h, init);
      g_k_.emplace_back(store, "dec.g_k." + tag, h, h, init);
      g_v_.emplace_back(store, "dec.g_v." + tag, h, h, init);
    }
    grus_.emplace_back(store, "dec.gru." + tag, h + 2, h, config.gru_layers, init);
  }
  f_q_ = Mlp(store, "dec.f_q", h + d, {{d, Activation::kTanh, false}}, init);
  f_k_ = Mlp(store, "dec.f_k", h + d, {{d, Activation::kTanh, false}}, init);
  f_v_ = Mlp(store, "dec.f_v", h + d, {{h, Activation::kTanh, false}, {h, Activation::kTanh, false}}, init);
  f_out_ = Mlp(store, "dec.f_out", h,
               {{h, Activation::kRelu, false}, {h, Activation::kRelu, false}, {2, Activation::kNone, false}}, init);
}

DecoderState Decoder::initial_state(std::size_t nodes) const {
  return DecoderState{grus_.front().initial_state(nodes)};
}

Tensor Decoder::by_category(const std::vector<Linear>& maps, const Tensor& x, const Batch& batch) const {
  if (maps.empty()) return x;
  Tensor out;
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const auto& rows = batch.category_rows[c];
    if (rows.empty()) continue;
    Tensor part = ops::scatter_add_rows(ops::tanh(maps[c].forward(ops::gather_rows(x, rows))), rows, x.rows());
    out = out.defined() ? ops::add(out, part) : part;
  }
  return out;
}

Tensor Decoder::ham_aggregate(const Tensor& h, const Batch& batch, const GraphSample& graph,
                              std::vector<double>* weights) const {
  const GraphLayout& layout = batch.layout;
  const std::size_t nodes = layout.num_nodes;
  if (h.rows() != nodes || h.cols() != config_.hidden) throw ShapeError("ham_aggregate: hidden state shape");
  if (graph.z.rows() != layout.num_edges()) throw ShapeError("ham_aggregate: graph does not match batch");
  if (batch.category_rows.size() != static_cast<std::size_t>(config_.categories)) {
    throw ConfigError("ham_aggregate: batch built for a different category count");
  }

  std::vector<std::size_t> sel, src, dst;
  for (std::size_t e = 0; e < layout.num_edges(); ++e)
    if (graph.z[e] > 0.5) {
      sel.push_back(e);
      src.push_back(layout.src[e]);
      dst.push_back(layout.dst[e]);
    }
  if (weights) weights->assign(layout.num_edges(), 0.0);
  if (sel.empty()) return Tensor::zeros({nodes, config_.hidden});

  const Tensor hq = by_category(g_q_, h, batch);
  const Tensor hk = by_category(g_k_, h, batch);
  const Tensor hv = by_category(g_v_, h, batch);
  const Tensor e = ops::gather_rows(graph.edge_features, sel);

  const Tensor q = f_q_.forward(ops::concat_cols({ops::gather_rows(hq, src), e}), false);
  const Tensor k = f_k_.forward(ops::concat_cols({ops::gather_rows(hk, dst), e}), false);
  const Tensor a = ops::scale(ops::row_dot(q, k), 1.0 / std::sqrt(static_cast<double>(config_.edge_dim)));

  // Per-target max shift; constant, so alpha is unchanged.
  std::vector<double> peak(nodes, -std::numeric_limits<double>::infinity());
  for (std::size_t k2 = 0; k2 < sel.size(); ++k2) peak[dst[k2]] = std::max(peak[dst[k2]], a[k2]);
  std::vector<double> shift(sel.size());
  for (std::size_t k2 = 0; k2 < sel.size(); ++k2) shift[k2] = -peak[dst[k2]];
  const Tensor w = ops::mul(ops::gather_rows(graph.z, sel), ops::exp(ops::add(a, Tensor::from({sel.size(), 1}, shift))));
  const Tensor denom = ops::gather_rows(ops::scatter_add_rows(w, dst, nodes), dst);
  const Tensor alpha = ops::div(w, denom);

  const Tensor rel = ops::sub(ops::gather_rows(hv, src), ops::gather_rows(hv, dst));
  const Tensor v = f_v_.forward(ops::concat_cols({rel, e}), false);
  if (weights)
    for (std::size_t k2 = 0; k2 < sel.size(); ++k2) (*weights)[sel[k2]] = alpha[k2];
  return ops::scatter_add_rows(ops::mul_col(v, alpha), dst, nodes);
}

Tensor Decoder::step(DecoderState& state, const Tensor& m, const Tensor& x, const Batch& batch,
                     const Tensor& eps) const {
  const std::size_t nodes = batch.num_nodes();
  if (x.rows() != nodes || x.cols() != 2) throw ShapeError("decoder step: positions must be [N x 2]");
  if (state.hidden.empty()) state = initial_state(nodes);
  for (int c : batch.node_category)
    if (c < 0 || c >= config_.categories) throw ConfigError("decoder step: unknown category " + std::to_string(c));
  const Tensor input = ops::concat_cols({m, x});
  std::vector<Tensor> next(state.hidden.size());
  for (std::size_t c = 0; c < grus_.size(); ++c) {
    const auto& rows = batch.category_rows[c];
    if (rows.empty()) continue;
    std::vector<Tensor> h_c;
    for (const Tensor& h : state.hidden) h_c.push_back(ops::gather_rows(h, rows));
    const auto out = grus_[c].forward(ops::gather_rows(input, rows), h_c);
    for (std::size_t l = 0; l < out.size(); ++l) {
      Tensor part = ops::scatter_add_rows(out[l], rows, nodes);
      next[l] = next[l].defined() ? ops::add(next[l], part) : part;
    }
  }
  state.hidden = std::move(next);
  const Tensor top = eps.defined() ? ops::add(state.hidden.back(), eps) : state.hidden.back();
  return ops::add(x, f_out_.forward(top, false));
}

}  // namespace himrae
