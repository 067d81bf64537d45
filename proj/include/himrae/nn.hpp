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
#include <map>
#include <string>
#include <vector>

#include "himrae/rng.hpp"
#include "himrae/tensor.hpp"

namespace himrae {

/// Named collection of learnable parameters and non-learnable buffers
/// (batch-norm running statistics). Iteration is sorted by key, which makes
/// checkpoints and optimizer updates order-deterministic.
class ParamStore {
 public:
  Tensor add_param(const std::string& key, Tensor value);
  Tensor add_buffer(const std::string& key, Tensor value);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const Tensor& get(const std::string& key) const;
  bool trainable(const std::string& key) const;

  std::vector<std::string> keys() const;
  std::vector<std::string> param_keys() const;
  std::size_t param_count() const;  // number of scalar parameters

  void zero_grad();

  /// Copies every value of `other` into the tensors with the same key here.
  /// Key sets and shapes must agree exactly.
  void assign(const std::map<std::string, Tensor>& other);
  std::map<std::string, Tensor> snapshot() const;

 private:
  struct Entry {
    Tensor tensor;
    bool trainable;
  };
  std::map<std::string, Entry> entries_;
};

using GradMap = std::map<std::string, std::vector<double>>;

/// Gradient buffers of every trainable parameter (zeros where untouched).
GradMap collect_grads(const ParamStore& params);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) values.
Tensor uniform_init(const Shape& shape, std::size_t fan_in, RngStream& rng, bool requires_grad = true);

enum class Activation { kNone, kElu, kRelu, kTanh };

Tensor activate(const Tensor& x, Activation act);

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, RngStream& rng);

  Tensor forward(const Tensor& x) const;
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor weight_;  // [in x out]
  Tensor bias_;    // [out]
};

/// Per-feature batch normalisation with learnable scale and shift.
/// Running statistics use momentum 0.9 (running = 0.9 running + 0.1 batch).
class BatchNorm {
 public:
  static constexpr double kMomentum = 0.9;
  static constexpr double kEps = 1e-5;

  BatchNorm() = default;
  BatchNorm(ParamStore& store, const std::string& name, std::size_t features);

  /// `training` selects batch statistics and updates the running buffers.
  Tensor forward(const Tensor& x, bool training) const;

 private:
  Tensor gamma_, beta_, running_mean_, running_var_;
};

struct LayerSpec {
  std::size_t width;
  Activation activation;
  bool batch_norm;
};

/// Stack of [affine, activation, optional batch norm] blocks.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& name, std::size_t in, std::vector<LayerSpec> layers,
      RngStream& rng);

  Tensor forward(const Tensor& x, bool training) const;
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return layers_.empty() ? in_ : layers_.back().width; }
  /// Zeroes the final affine layer so the MLP outputs exactly zero.
  void zero_last_layer();

 private:
  std::size_t in_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<Linear> linears_;
  std::vector<BatchNorm> norms_;  // indexed like layers_; unused entries are empty
};

/// [affine, ELU, batch norm] x 2.
std::vector<LayerSpec> elu_bn_blocks(std::size_t width);

/// Standard GRU cell:
///   r = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
///   u = sigmoid(x W_iu + b_iu + h W_hu + b_hu)
///   n = tanh(x W_in + b_in + r * (h W_hn + b_hn))
///   h' = (1 - u) * n + u * h
class GruCell {
 public:
  GruCell() = default;
  GruCell(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, RngStream& rng);

  Tensor forward(const Tensor& x, const Tensor& h) const;
  std::size_t input_size() const { return in_; }
  std::size_t hidden_size() const { return hidden_; }

 private:
  std::size_t in_ = 0, hidden_ = 0;
  Tensor w_ih_, w_hh_, b_ih_, b_hh_;
};

/// Stacked GRU cells; layer k > 0 consumes the new hidden state of layer k-1.
class GruStack {
 public:
  GruStack() = default;
  GruStack(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden,
           std::size_t layers, RngStream& rng);

  std::vector<Tensor> forward(const Tensor& x, const std::vector<Tensor>& h) const;
  std::vector<Tensor> initial_state(std::size_t rows) const;
  std::size_t layers() const { return cells_.size(); }
  std::size_t hidden_size() const { return cells_.empty() ? 0 : cells_.front().hidden_size(); }

 private:
  std::vector<GruCell> cells_;
};

}  // namespace himrae
