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

#include "himrae/nn.hpp"

#include <cmath>

#include "himrae/errors.hpp"

namespace himrae {

Tensor ParamStore::add_param(const std::string& key, Tensor value) {
  if (contains(key)) throw ContractError("ParamStore: duplicate key " + key);
  value.node()->requires_grad = true;
  entries_.emplace(key, Entry{value, true});
  return value;
}

Tensor ParamStore::add_buffer(const std::string& key, Tensor value) {
  if (contains(key)) throw ContractError("ParamStore: duplicate key " + key);
  value.node()->requires_grad = false;
  entries_.emplace(key, Entry{value, false});
  return value;
}

const Tensor& ParamStore::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ContractError("ParamStore: unknown key " + key);
  return it->second.tensor;
}

bool ParamStore::trainable(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ContractError("ParamStore: unknown key " + key);
  return it->second.trainable;
}

std::vector<std::string> ParamStore::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) out.push_back(k);
  return out;
}

std::vector<std::string> ParamStore::param_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (e.trainable) out.push_back(k);
  return out;
}

std::size_t ParamStore::param_count() const {
  std::size_t n = 0;
  for (const auto& [k, e] : entries_)
    if (e.trainable) n += e.tensor.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [k, e] : entries_) e.tensor.zero_grad();
}

void ParamStore::assign(const std::map<std::string, Tensor>& other) {
  if (other.size() != entries_.size()) {
    throw DataError("parameter set has " + std::to_string(other.size()) + " entries, model expects " +
                    std::to_string(entries_.size()));
  }
  for (auto& [k, e] : entries_) {
    auto it = other.find(k);
    if (it == other.end()) throw DataError("parameter missing: " + k);
    if (it->second.shape() != e.tensor.shape()) {
      throw DataError("parameter " + k + " has shape " + shape_str(it->second.shape()) + ", expected " +
                      shape_str(e.tensor.shape()));
    }
    auto dst = e.tensor.mutable_values();
    auto src = it->second.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

std::map<std::string, Tensor> ParamStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [k, e] : entries_) out.emplace(k, e.tensor.clone());
  return out;
}

GradMap collect_grads(const ParamStore& params) {
  GradMap grads;
  for (const auto& key : params.param_keys()) grads.emplace(key, params.get(key).grad());
  return grads;
}

Tensor uniform_init(const Shape& shape, std::size_t fan_in, RngStream& rng, bool requires_grad) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(shape, std::move(v), requires_grad);
}

Tensor activate(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::kNone:
      return x;
    case Activation::kElu:
      return ops::elu(x);
    case Activation::kRelu:
      return ops::relu(x);
    case Activation::kTanh:
      return ops::tanh(x);
  }
  return x;
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, RngStream& rng)
    : in_(in), out_(out) {
  weight_ = store.add_param(name + ".weight", uniform_init({in, out}, in, rng));
  bias_ = store.add_param(name + ".bias", uniform_init({out}, in, rng));
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != in_) {
    throw ShapeError("Linear: expected [n x " + std::to_string(in_) + "] input, got " + shape_str(x.shape()));
  }
  return ops::add_bias(ops::matmul(x, weight_), bias_);
}

BatchNorm::BatchNorm(ParamStore& store, const std::string& name, std::size_t features) {
  gamma_ = store.add_param(name + ".gamma", Tensor::full({features}, 1.0));
  beta_ = store.add_param(name + ".beta", Tensor::zeros({features}));
  running_mean_ = store.add_buffer(name + ".running_mean", Tensor::zeros({features}));
  running_var_ = store.add_buffer(name + ".running_var", Tensor::full({features}, 1.0));
}

Tensor BatchNorm::forward(const Tensor& x, bool training) const {
  std::vector<double> mean, var;
  // A single row has no spread; fall back to running statistics.
  const bool batch_stats = training && x.rows() > 1;
  Tensor y = ops::batch_norm(x, running_mean_.values(), running_var_.values(), kEps, batch_stats, &mean, &var);
  if (batch_stats && grad_enabled()) {
    const double n = static_cast<double>(x.rows());
    auto rm = Tensor(running_mean_).mutable_values();
    auto rv = Tensor(running_var_).mutable_values();
    for (std::size_t c = 0; c < rm.size(); ++c) {
      rm[c] = kMomentum * rm[c] + (1.0 - kMomentum) * mean[c];
      rv[c] = kMomentum * rv[c] + (1.0 - kMomentum) * var[c] * n / (n - 1.0);
    }
  }
  return ops::add_bias(ops::mul_row(y, gamma_), beta_);
}

Mlp::Mlp(ParamStore& store, const std::string& name, std::size_t in, std::vector<LayerSpec> layers,
         RngStream& rng)
    : in_(in), layers_(std::move(layers)) {
  std::size_t width = in;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const std::string prefix = name + "." + std::to_string(k);
    linears_.emplace_back(store, prefix + ".linear", width, layers_[k].width, rng);
    norms_.push_back(layers_[k].batch_norm ? BatchNorm(store, prefix + ".bn", layers_[k].width) : BatchNorm());
    width = layers_[k].width;
  }
}

Tensor Mlp::forward(const Tensor& x, bool training) const {
  if (x.rank() != 2 || x.cols() != in_) {
    throw ShapeError("Mlp: expected [n x " + std::to_string(in_) + "] input, got " + shape_str(x.shape()));
  }
  Tensor h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = activate(linears_[k].forward(h), layers_[k].activation);
    if (layers_[k].batch_norm) h = norms_[k].forward(h, training);
  }
  return h;
}

void Mlp::zero_last_layer() {
  if (linears_.empty()) return;
  for (auto& v : linears_.back().weight().mutable_values()) v = 0.0;
  for (auto& v : linears_.back().bias().mutable_values()) v = 0.0;
}

std::vector<LayerSpec> elu_bn_blocks(std::size_t width) {
  return {{width, Activation::kElu, true}, {width, Activation::kElu, true}};
}

GruCell::GruCell(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                 RngStream& rng)
    : in_(in), hidden_(hidden) {
  w_ih_ = store.add_param(name + ".w_ih", uniform_init({in, 3 * hidden}, in, rng));
  w_hh_ = store.add_param(name + ".w_hh", uniform_init({hidden, 3 * hidden}, hidden, rng));
  b_ih_ = store.add_param(name + ".b_ih", uniform_init({3 * hidden}, in, rng));
  b_hh_ = store.add_param(name + ".b_hh", uniform_init({3 * hidden}, hidden, rng));
}

Tensor GruCell::forward(const Tensor& x, const Tensor& h) const {
  if (x.rank() != 2 || x.cols() != in_) {
    throw ShapeError("GruCell: expected input width " + std::to_string(in_) + ", got " + shape_str(x.shape()));
  }
  if (h.rank() != 2 || h.cols() != hidden_ || h.rows() != x.rows()) {
    throw ShapeError("GruCell: expected hidden [" + std::to_string(x.rows()) + " x " + std::to_string(hidden_) +
                     "], got " + shape_str(h.shape()));
  }
  const Tensor gi = ops::add_bias(ops::matmul(x, w_ih_), b_ih_);
  const Tensor gh = ops::add_bias(ops::matmul(h, w_hh_), b_hh_);
  const std::size_t H = hidden_;
  const Tensor reset = ops::sigmoid(ops::add(ops::slice_cols(gi, 0, H), ops::slice_cols(gh, 0, H)));
  const Tensor update = ops::sigmoid(ops::add(ops::slice_cols(gi, H, H), ops::slice_cols(gh, H, H)));
  const Tensor cand =
      ops::tanh(ops::add(ops::slice_cols(gi, 2 * H, H), ops::mul(reset, ops::slice_cols(gh, 2 * H, H))));
  // (1 - u) * n + u * h  ==  n + u * (h - n)
  return ops::add(cand, ops::mul(update, ops::sub(h, cand)));
}

GruStack::GruStack(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                   std::size_t layers, RngStream& rng) {
  for (std::size_t k = 0; k < layers; ++k) {
    cells_.emplace_back(store, name + ".l" + std::to_string(k), k == 0 ? in : hidden, hidden, rng);
  }
}

std::vector<Tensor> GruStack::forward(const Tensor& x, const std::vector<Tensor>& h) const {
  if (h.size() != cells_.size()) throw ShapeError("GruStack: expected one hidden state per layer");
  std::vector<Tensor> out;
  out.reserve(cells_.size());
  Tensor input = x;
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    out.push_back(cells_[k].forward(input, h[k]));
    input = out.back();
  }
  return out;
}

std::vector<Tensor> GruStack::initial_state(std::size_t rows) const {
  std::vector<Tensor> h;
  for (const auto& c : cells_) h.push_back(Tensor::zeros({rows, c.hidden_size()}));
  return h;
}

}  // namespace himrae
