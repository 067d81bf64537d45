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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "himrae/batch.hpp"
#include "himrae/data.hpp"
#include "himrae/graph_complexity.hpp"
#include "himrae/model.hpp"
#include "himrae/optim.hpp"

namespace himrae {

enum class Strategy { kPlain, kMixup, kTF, kTFPlus, kGE, kGEMixup };
Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy strategy);
bool uses_mixup(Strategy strategy);

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double gamma = 1e-4;
  Penalty penalty = Penalty::kEntropy;
  Strategy strategy = Strategy::kGEMixup;
  double alpha_init = 10.0;
  std::size_t alpha_decay_interval = 10;
  double alpha_decay_factor = 0.5;
  double alpha_floor = 0.1;
  /// Samples per validation scene for checkpoint selection (mean ADE).
  std::size_t val_samples = 3;
  std::uint64_t seed = 0;

  void validate() const;
  /// gamma for strategies that regularise the graph, 0 otherwise. Density
  /// and degree penalties always apply with the configured gamma.
  double effective_gamma() const;
};

struct MixState {
  double alpha = 10.0;
  std::size_t epoch = 0;
};

/// Advances one epoch; every `alpha_decay_interval` epochs multiplies alpha
/// by `alpha_decay_factor`, never going below `alpha_floor`.
MixState decay_alpha(MixState state, const TrainConfig& config);
/// State after `epoch` calls to decay_alpha from the initial alpha.
MixState mix_state_at(std::size_t epoch, const TrainConfig& config);

/// Mean over scenes of (1 / (N T_f)) sum_{t >= T_h} ||X^t - Xhat^t||^2.
/// `target` and `predicted` are per-step [nodes x 2]; steps before `history`
/// are ignored.
Tensor reconstruction_loss(const std::vector<Tensor>& target, const std::vector<Tensor>& predicted,
                           const GraphLayout& layout, std::size_t history);

/// lambda ~ Beta(alpha, alpha). Throws ConfigError when alpha <= 0.
double sample_beta(double alpha, RngStream& rng);
/// lambda * xhat + (1 - lambda) * x.
Tensor mix(const Tensor& xhat, const Tensor& x, double lambda);

/// Scalar penalty per window: mean over scenes of penalty(Z^m).
std::vector<Tensor> window_penalties(const std::vector<GraphSample>& graphs, const GraphLayout& layout,
                                     Penalty penalty);

struct StepLosses {
  double loss = 0.0;  // reconstruction objective of the strategy (L1 for mixup)
  double l1 = 0.0;
  double l2 = 0.0;
  double penalty = 0.0;
};

/// The two updates of the mixup strategy on one batch. Draws one lambda per
/// scene and window boundary unless `forced_lambda` is set.
StepLosses mixup_step(Model& model, Adam& optimizer, const Batch& batch, const TrainConfig& config,
                      const MixState& mix, RngStream& rng, std::optional<double> forced_lambda = std::nullopt);

/// Teacher-forced training loss for TF or TF+ (no optimizer step).
Tensor teacher_forcing_loss(const Model& model, const Batch& batch, Strategy variant, RngStream& rng);

/// One optimizer update (two for mixup strategies) on `batch`.
StepLosses train_step(Model& model, Adam& optimizer, const Batch& batch, const TrainConfig& config,
                      const MixState& mix, RngStream& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  std::string strategy;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double entropy = 0.0;
  double density = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double val_ade = 0.0;
};

inline constexpr const char* kEpochLogHeader = "epoch,strategy,train_loss,val_loss,L1,L2,entropy,density,alpha,gamma";
std::string format_epoch_row(const EpochRecord& record);

struct TrainOptions {
  /// Best-validation checkpoint; the latest epoch goes to "<path>.last".
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<std::filesystem::path> log_path;
  /// Continue from a checkpoint written by train(); epochs continue from the
  /// stored epoch + 1 and Adam moments restart from zero.
  std::optional<std::filesystem::path> resume;
  Normalizer normalizer;
  std::size_t threads = 1;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val_ade = 0.0;
  std::map<std::string, Tensor> best_checkpoint;
};

/// Runs `config.epochs` epochs (counted from the resume point). Throws
/// NumericalError on a non-finite loss.
TrainResult train(Model& model, const TrainConfig& config, const std::vector<Scene>& train_scenes,
                  const std::vector<Scene>& val_scenes, const TrainOptions& options = {});

/// Model records plus "meta.train.epoch" and "meta.normalizer".
std::map<std::string, Tensor> make_checkpoint(const Model& model, std::size_t epoch, const Normalizer& normalizer);
Normalizer checkpoint_normalizer(const std::map<std::string, Tensor>& records);
std::size_t checkpoint_epoch(const std::map<std::string, Tensor>& records);

}  // namespace himrae
