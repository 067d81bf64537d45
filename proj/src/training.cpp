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

#include "himrae/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "himrae/checkpoint.hpp"
#include "himrae/errors.hpp"
#include "himrae/evaluation.hpp"

namespace himrae {

namespace {

constexpr std::uint64_t kTrainStream = 0x7a1;
constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kValidationSeed = 0x7a1d;

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is not finite; lower the learning rate or gamma");
  }
}

Tensor mean_of(const Tensor& per_scene) {
  return ops::scale(ops::sum(per_scene), 1.0 / static_cast<double>(per_scene.rows()));
}

double total(const std::vector<Tensor>& penalties) {
  double s = 0.0;
  for (const auto& p : penalties) s += p.item();
  return penalties.empty() ? 0.0 : s / static_cast<double>(penalties.size());
}

void apply(Model& model, Adam& optimizer, const Tensor& loss, const char* what) {
  check_finite(loss.item(), what);
  model.params().zero_grad();
  backward(loss);
  optimizer.step(model.params(), collect_grads(model.params()));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Strategy parse_strategy(const std::string& name) {
  if (name == "plain") return Strategy::kPlain;
  if (name == "mixup") return Strategy::kMixup;
  if (name == "TF") return Strategy::kTF;
  if (name == "TF_plus") return Strategy::kTFPlus;
  if (name == "GE") return Strategy::kGE;
  if (name == "GE_mixup") return Strategy::kGEMixup;
  throw ConfigError("unknown strategy '" + name + "' (expected plain, mixup, TF, TF_plus, GE or GE_mixup)");
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kPlain:
      return "plain";
    case Strategy::kMixup:
      return "mixup";
    case Strategy::kTF:
      return "TF";
    case Strategy::kTFPlus:
      return "TF_plus";
    case Strategy::kGE:
      return "GE";
    case Strategy::kGEMixup:
      return "GE_mixup";
  }
  return "plain";
}

bool uses_mixup(Strategy strategy) { return strategy == Strategy::kMixup || strategy == Strategy::kGEMixup; }

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (!(alpha_init > 0.0)) throw ConfigError("alpha_init must be positive");
  if (alpha_decay_interval == 0) throw ConfigError("alpha_decay_interval must be positive");
  if (!(alpha_decay_factor > 0.0)) throw ConfigError("alpha_decay_factor must be positive");
  if (!(alpha_floor > 0.0)) throw ConfigError("alpha_floor must be positive");
  if (val_samples == 0) throw ConfigError("val_samples must be positive");
}

double TrainConfig::effective_gamma() const {
  if (strategy == Strategy::kGE || strategy == Strategy::kGEMixup) return gamma;
  if (penalty != Penalty::kEntropy) return gamma;
  return 0.0;
}

MixState decay_alpha(MixState state, const TrainConfig& config) {
  ++state.epoch;
  if (state.epoch % config.alpha_decay_interval == 0) {
    state.alpha = std::max(config.alpha_floor, state.alpha * config.alpha_decay_factor);
  }
  return state;
}

MixState mix_state_at(std::size_t epoch, const TrainConfig& config) {
  MixState s{config.alpha_init, 0};
  while (s.epoch < epoch) s = decay_alpha(s, config);
  return s;
}

Tensor reconstruction_loss(const std::vector<Tensor>& target, const std::vector<Tensor>& predicted,
                           const GraphLayout& layout, std::size_t history) {
  if (target.size() != predicted.size() || target.size() <= history) {
    throw ShapeError("reconstruction_loss: step counts differ or no future steps");
  }
  const std::size_t future = target.size() - history;
  Tensor acc;
  for (std::size_t t = history; t < target.size(); ++t) {
    const Tensor d = ops::sub(predicted[t], target[t]);
    const Tensor sq = ops::row_dot(d, d);
    acc = acc.defined() ? ops::add(acc, sq) : sq;
  }
  std::vector<double> w(layout.num_nodes);
  const double scenes = static_cast<double>(layout.num_scenes);
  for (std::size_t i = 0; i < layout.num_nodes; ++i) {
    w[i] = 1.0 / (static_cast<double>(layout.scene_size[layout.node_scene[i]]) * static_cast<double>(future) * scenes);
  }
  const std::size_t n = w.size();
  return ops::sum(ops::mul(acc, Tensor::from({n, 1}, std::move(w))));
}

double sample_beta(double alpha, RngStream& rng) {
  if (!(alpha > 0.0)) throw ConfigError("Beta parameter alpha must be positive");
  return rng.beta(alpha, alpha);
}

Tensor mix(const Tensor& xhat, const Tensor& x, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("mix: lambda outside [0, 1]");
  return ops::add(ops::scale(xhat, lambda), ops::scale(x, 1.0 - lambda));
}

std::vector<Tensor> window_penalties(const std::vector<GraphSample>& graphs, const GraphLayout& layout,
                                     Penalty penalty) {
  std::vector<Tensor> out;
  for (const auto& g : graphs) out.push_back(mean_of(penalty_per_scene(penalty, g.z, layout)));
  return out;
}

StepLosses mixup_step(Model& model, Adam& optimizer, const Batch& batch, const TrainConfig& config,
                      const MixState& mix_state, RngStream& rng, std::optional<double> forced_lambda) {
  const std::size_t history = model.config().history;
  const double gamma = config.effective_gamma();
  const std::size_t boundaries = model.boundary_steps().size();
  std::vector<double> lambdas(boundaries * batch.num_scenes());
  for (double& l : lambdas) l = forced_lambda ? *forced_lambda : sample_beta(mix_state.alpha, rng);
  const std::vector<Tensor> noise = model.draw_output_noise(batch, rng);
  const RngStream graph_rng = rng.derive(0x6a);

  StepLosses out;
  {
    RngStream g = graph_rng;
    const auto graphs = model.encode_truth(batch, Mode::kTrain, g);
    RolloutOptions ro;
    ro.policy = InputPolicy::kMixup;
    ro.lambdas = &lambdas;
    ro.output_noise = &noise;
    ro.graphs = &graphs;
    const auto r = model.rollout(batch, ro, rng);
    const Tensor l1 = reconstruction_loss(batch.truth, r.predictions, batch.layout, history);
    const auto pens = window_penalties(graphs, batch.layout, config.penalty);
    out.l1 = out.loss = l1.item();
    out.penalty = total(pens);
    apply(model, optimizer, regularized_loss(l1, pens, gamma), "mixup loss L1");
  }
  {
    RngStream g = graph_rng;
    const auto graphs = model.encode_truth(batch, Mode::kTrain, g);
    RolloutOptions ro;
    ro.output_noise = &noise;
    ro.graphs = &graphs;
    std::vector<Tensor> target;
    {
      NoGradGuard no_grad;
      RolloutOptions mixed = ro;
      mixed.policy = InputPolicy::kMixup;
      mixed.lambdas = &lambdas;
      for (const Tensor& p : model.rollout(batch, mixed, rng).predictions) target.push_back(p.defined() ? p.detach() : p);
    }
    const auto free = model.rollout(batch, ro, rng);
    const Tensor l2 = reconstruction_loss(target, free.predictions, batch.layout, history);
    out.l2 = l2.item();
    apply(model, optimizer, l2, "mixup loss L2");
  }
  return out;
}

Tensor teacher_forcing_loss(const Model& model, const Batch& batch, Strategy variant, RngStream& rng) {
  if (variant != Strategy::kTF && variant != Strategy::kTFPlus) throw ContractError("teacher forcing needs TF or TF_plus");
  RolloutOptions ro;
  ro.policy = variant == Strategy::kTF ? InputPolicy::kTeacherForcing : InputPolicy::kTeacherForcingPlus;
  const auto r = model.rollout(batch, ro, rng);
  return reconstruction_loss(batch.truth, r.predictions, batch.layout, model.config().history);
}

StepLosses train_step(Model& model, Adam& optimizer, const Batch& batch, const TrainConfig& config,
                      const MixState& mix_state, RngStream& rng) {
  if (uses_mixup(config.strategy)) return mixup_step(model, optimizer, batch, config, mix_state, rng);
  const auto graphs = model.encode_truth(batch, Mode::kTrain, rng);
  RolloutOptions ro;
  ro.graphs = &graphs;
  if (config.strategy == Strategy::kTF) ro.policy = InputPolicy::kTeacherForcing;
  if (config.strategy == Strategy::kTFPlus) ro.policy = InputPolicy::kTeacherForcingPlus;
  const auto r = model.rollout(batch, ro, rng);
  const Tensor recon = reconstruction_loss(batch.truth, r.predictions, batch.layout, model.config().history);
  const auto pens = window_penalties(graphs, batch.layout, config.penalty);
  StepLosses out;
  out.loss = recon.item();
  out.penalty = total(pens);
  apply(model, optimizer, regularized_loss(recon, pens, config.effective_gamma()), "training loss");
  return out;
}

std::string format_epoch_row(const EpochRecord& r) {
  return std::to_string(r.epoch) + ',' + r.strategy + ',' + fmt(r.train_loss) + ',' + fmt(r.val_loss) + ',' +
         fmt(r.l1) + ',' + fmt(r.l2) + ',' + fmt(r.entropy) + ',' + fmt(r.density) + ',' + fmt(r.alpha) + ',' +
         fmt(r.gamma);
}

std::map<std::string, Tensor> make_checkpoint(const Model& model, std::size_t epoch, const Normalizer& normalizer) {
  auto rec = model.records();
  rec["meta.train.epoch"] = Tensor::scalar(static_cast<double>(epoch));
  rec["meta.normalizer"] = Tensor::from({4}, {normalizer.min_x, normalizer.max_x, normalizer.min_y, normalizer.max_y});
  return rec;
}

Normalizer checkpoint_normalizer(const std::map<std::string, Tensor>& records) {
  auto it = records.find("meta.normalizer");
  if (it == records.end() || it->second.size() != 4) throw DataError("checkpoint lacks meta.normalizer");
  const auto v = it->second.values();
  Normalizer n{v[0], v[1], v[2], v[3]};
  n.validate();
  return n;
}

std::size_t checkpoint_epoch(const std::map<std::string, Tensor>& records) {
  auto it = records.find("meta.train.epoch");
  if (it == records.end() || it->second.size() != 1 || !(it->second[0] >= 0.0)) {
    throw DataError("checkpoint lacks meta.train.epoch");
  }
  return static_cast<std::size_t>(it->second[0]);
}

TrainResult train(Model& model, const TrainConfig& config, const std::vector<Scene>& train_scenes,
                  const std::vector<Scene>& val_scenes, const TrainOptions& options) {
  config.validate();
  if (train_scenes.empty()) throw DataError("training split is empty");
  const int categories = model.config().categories;

  std::size_t first_epoch = 0;
  if (options.resume) {
    const auto rec = load_checkpoint(*options.resume);
    if (Model::config_from_records(rec).hidden != model.config().hidden) {
      throw ConfigError("resume checkpoint has a different architecture");
    }
    model.load_records(rec);
    first_epoch = checkpoint_epoch(rec) + 1;
  }

  Adam optimizer(AdamConfig{config.learning_rate});
  std::ofstream log;
  if (options.log_path) {
    const bool append = options.resume && std::filesystem::exists(*options.log_path);
    log.open(*options.log_path, append ? std::ios::app | std::ios::binary : std::ios::binary);
    if (!log) throw DataError("cannot write " + options.log_path->string());
    if (!append) log << kEpochLogHeader << '\n';
  }

  TrainResult result;
  result.best_val_ade = std::numeric_limits<double>::infinity();
  const RngStream root(config.seed, kTrainStream);
  std::vector<std::size_t> order(train_scenes.size());

  for (std::size_t epoch = first_epoch; epoch < first_epoch + config.epochs; ++epoch) {
    const MixState mix_state = mix_state_at(epoch, config);
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle = RngStream(config.seed, kShuffleStream).derive(epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.uniform_int(i)]);

    double loss_sum = 0.0, l1_sum = 0.0, l2_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::vector<const Scene*> part;
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i)
        part.push_back(&train_scenes[order[i]]);
      const Batch batch = Batch::from_scenes(part, categories);
      RngStream rng = root.derive(epoch).derive(batches);
      const StepLosses s = train_step(model, optimizer, batch, config, mix_state, rng);
      loss_sum += s.loss;
      l1_sum += s.l1;
      l2_sum += s.l2;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.strategy = to_string(config.strategy);
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.l1 = l1_sum / static_cast<double>(batches);
    rec.l2 = l2_sum / static_cast<double>(batches);
    rec.alpha = uses_mixup(config.strategy) ? mix_state.alpha : 0.0;
    rec.gamma = config.gamma;
    check_finite(rec.train_loss, "training loss");

    const auto& eval_scenes = val_scenes.empty() ? train_scenes : val_scenes;
    EvalOptions eo;
    eo.samples = config.val_samples;
    eo.seed = kValidationSeed;
    eo.threads = options.threads;
    eo.normalizer = options.normalizer;
    const MetricsRecord m = sampled_metrics(model, eval_scenes, eo);
    rec.val_loss = m.recon_loss;
    rec.entropy = m.avg_entropy;
    rec.density = m.avg_density;
    rec.val_ade = m.mean_ade;
    check_finite(rec.val_loss, "validation loss");

    auto ckpt = make_checkpoint(model, epoch, options.normalizer);
    ckpt["meta.train.strategy"] = Tensor::scalar(static_cast<double>(config.strategy));
    ckpt["meta.train.gamma"] = Tensor::scalar(config.gamma);
    if (rec.val_ade < result.best_val_ade) {
      result.best_val_ade = rec.val_ade;
      result.best_epoch = epoch;
      result.best_checkpoint = ckpt;
      if (options.checkpoint_path) save_checkpoint(*options.checkpoint_path, ckpt);
    }
    if (options.checkpoint_path) save_checkpoint(options.checkpoint_path->string() + ".last", ckpt);
    if (log) log << format_epoch_row(rec) << '\n' << std::flush;
    result.log.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  return result;
}

}  // namespace himrae
