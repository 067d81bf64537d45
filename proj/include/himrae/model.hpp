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

#include "himrae/batch.hpp"
#include "himrae/data.hpp"
#include "himrae/decoder.hpp"
#include "himrae/encoder.hpp"
#include "himrae/model_config.hpp"
#include "himrae/nn.hpp"

namespace himrae {

/// Source of the decoder input at future steps.
enum class InputPolicy {
  kFreeRun,             // previous prediction
  kTeacherForcing,      // ground truth at every step
  kTeacherForcingPlus,  // ground truth at window boundaries, prediction otherwise
  kMixup,               // lambda * stop_grad(prediction) + (1 - lambda) * truth at boundaries
};

struct RolloutOptions {
  Mode mode = Mode::kTrain;
  InputPolicy policy = InputPolicy::kFreeRun;
  /// Encoder windows read ground truth (training) or the decoder inputs,
  /// which mix truth and predictions past the history.
  bool encoder_from_truth = true;
  /// Mixup coefficients, lambdas[b * S + s] for boundary b and scene s.
  const std::vector<double>* lambdas = nullptr;
  /// Pre-drawn output noise per input step (see Model::draw_output_noise).
  const std::vector<Tensor>* output_noise = nullptr;
  /// Pre-inferred graphs, one per window in Model::graphs_needed().
  const std::vector<GraphSample>* graphs = nullptr;
};

struct RolloutResult {
  std::vector<Tensor> inputs;       // x^t fed at input step t = 0 .. T-2
  std::vector<Tensor> predictions;  // mu^t for t = 1 .. T-1; index 0 undefined
  std::vector<GraphSample> graphs;  // graph of window w drives steps with graph_for_step(t) == w
};

class Model {
 public:
  explicit Model(const ModelConfig& config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  const WindowPlan& plan() const { return plan_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const Encoder& encoder() const { return encoder_; }
  Decoder& decoder() { return decoder_; }
  const Decoder& decoder() const { return decoder_; }

  /// Number of windows whose graphs drive some prediction.
  std::size_t graphs_needed() const;
  /// Zero-based input steps at which TF+ and mixup inject ground truth: the
  /// last step of every window that lies in the future and has a successor.
  std::vector<std::size_t> boundary_steps() const;

  /// Graphs of every needed window, inferred from ground truth.
  std::vector<GraphSample> encode_truth(const Batch& batch, Mode mode, RngStream& rng) const;
  /// One [nodes x H] standard normal tensor per input step; undefined tensors
  /// when output noise is disabled.
  std::vector<Tensor> draw_output_noise(const Batch& batch, RngStream& rng) const;

  /// Recursive prediction over all T steps with ground-truth burn-in.
  RolloutResult rollout(const Batch& batch, const RolloutOptions& options, RngStream& rng) const;

  /// Parameters plus "meta.*" records describing the architecture.
  std::map<std::string, Tensor> records() const;
  static ModelConfig config_from_records(const std::map<std::string, Tensor>& records);
  /// Restores parameters from `records`; non-"meta." keys must match exactly.
  void load_records(const std::map<std::string, Tensor>& records);

 private:
  ModelConfig config_;
  WindowPlan plan_;
  ParamStore params_;
  Encoder encoder_;
  Decoder decoder_;
};

/// True for "meta." records, which carry no parameters.
bool is_meta_key(const std::string& key);

}  // namespace himrae
