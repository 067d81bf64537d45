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
#include <cstdint>

namespace himrae {

/// Train mode: batch statistics in batch norm, relaxed (binary concrete)
/// relations. Test mode: running statistics, hard Bernoulli relations.
enum class Mode { kTrain, kTest };

struct ModelConfig {
  int categories = 3;
  std::size_t history = 5;
  std::size_t future = 10;
  std::size_t tau = 5;
  std::size_t hidden = 128;    // H: node/edge hidden width, decoder GRU width
  std::size_t edge_dim = 128;  // D: edge feature and attention query width
  std::size_t gru_layers = 2;
  double temperature = 0.5;
  /// Replaces the category-aware query/key/value mappings by the identity.
  bool homogeneous = false;
  /// Gaussian noise on edge features, E = E~ + N(0, I).
  bool edge_noise = true;
  /// Gaussian noise on the decoder hidden state before f_out.
  bool output_noise = true;
  /// Logistic noise in train-mode relations and Bernoulli draws in test mode;
  /// when off, train mode uses sigmoid(logit / T) and test mode thresholds
  /// the probability at 1/2.
  bool relation_noise = true;
  std::uint64_t init_seed = 0;

  std::size_t steps() const { return history + future; }
  /// Throws ConfigError on invalid combinations.
  void validate() const;
};

}  // namespace himrae
