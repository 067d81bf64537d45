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

#include "himrae/model.hpp"

#include <algorithm>
#include <cmath>

#include "himrae/errors.hpp"

namespace himrae {

void ModelConfig::validate() const {
  if (categories < 1) throw ConfigError("categories must be at least 1");
  if (hidden == 0 || edge_dim == 0) throw ConfigError("hidden and edge_dim must be positive");
  if (gru_layers == 0) throw ConfigError("gru_layers must be positive");
  if (future == 0) throw ConfigError("future must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  plan_windows(history, future, tau);
}

namespace {

ModelConfig checked(ModelConfig config) {
  config.validate();
  return config;
}

RngStream init_stream(const ModelConfig& config) { return RngStream(config.init_seed, 0x1417); }

}  // namespace

bool is_meta_key(const std::string& key) { return key.rfind("meta.", 0) == 0; }

Model::Model(const ModelConfig& config)
    : config_(checked(config)), plan_(plan_windows(config.history, config.future, config.tau)) {
  RngStream init = init_stream(config_);
  RngStream enc_rng = init.derive(1), dec_rng = init.derive(2);
  encoder_ = Encoder(params_, config_, enc_rng);
  decoder_ = Decoder(params_, config_, dec_rng);
}

std::size_t Model::graphs_needed() const {
  std::size_t needed = 1;
  for (std::size_t t = 1; t < plan_.total_steps(); ++t) needed = std::max(needed, plan_.graph_for_step(t) + 1);
  return needed;
}

std::vector<std::size_t> Model::boundary_steps() const {
  std::vector<std::size_t> out;
  for (std::size_t t = config_.history; t + 1 < plan_.total_steps(); ++t)
    if ((t + 1) % config_.tau == 0) out.push_back(t);
  return out;
}

std::vector<GraphSample> Model::encode_truth(const Batch& batch, Mode mode, RngStream& rng) const {
  std::vector<GraphSample> graphs;
  EncoderState state;
  for (std::size_t w = 0; w < graphs_needed(); ++w) {
    const Tensor window = window_features(batch.truth, plan_.window_begin(w), config_.tau);
    graphs.push_back(encoder_.encode(window, batch.layout, state, mode, rng));
  }
  return graphs;
}

std::vector<Tensor> Model::draw_output_noise(const Batch& batch, RngStream& rng) const {
  std::vector<Tensor> noise(plan_.total_steps() - 1);
  if (!config_.output_noise) return noise;
  for (Tensor& t : noise) {
    std::vector<double> v(batch.num_nodes() * config_.hidden);
    for (double& x : v) x = rng.normal();
    t = Tensor::from({batch.num_nodes(), config_.hidden}, std::move(v));
  }
  return noise;
}

RolloutResult Model::rollout(const Batch& batch, const RolloutOptions& options, RngStream& rng) const {
  const std::size_t total = plan_.total_steps();
  if (batch.steps != total) {
    throw DataError("scene length " + std::to_string(batch.steps) + " differs from T_h + T_f = " +
                    std::to_string(total));
  }
  if (batch.category_rows.size() != static_cast<std::size_t>(config_.categories)) {
    throw ConfigError("batch built for " + std::to_string(batch.category_rows.size()) + " categories, model has " +
                      std::to_string(config_.categories));
  }
  const auto boundaries = boundary_steps();
  if (options.policy == InputPolicy::kMixup &&
      (!options.lambdas || options.lambdas->size() != boundaries.size() * batch.num_scenes())) {
    throw ContractError("mixup rollout needs one lambda per boundary and scene");
  }
  if (options.graphs && options.graphs->size() < graphs_needed()) {
    throw ContractError("rollout: missing graph for a window");
  }
  if (options.output_noise && options.output_noise->size() != total - 1) {
    throw ContractError("rollout: output noise table has the wrong length");
  }

  RolloutResult result;
  result.predictions.resize(total);
  if (options.graphs) result.graphs.assign(options.graphs->begin(), options.graphs->begin() + graphs_needed());

  EncoderState enc_state;
  DecoderState dec_state = decoder_.initial_state(batch.num_nodes());
  std::size_t boundary_index = 0;

  for (std::size_t t = 0; t + 1 < total; ++t) {
    // Decoder input at step t.
    Tensor x;
    if (t < config_.history) {
      x = batch.truth[t];
    } else {
      const bool boundary = boundary_index < boundaries.size() && boundaries[boundary_index] == t;
      switch (options.policy) {
        case InputPolicy::kFreeRun:
          x = result.predictions[t];
          break;
        case InputPolicy::kTeacherForcing:
          x = batch.truth[t];
          break;
        case InputPolicy::kTeacherForcingPlus:
          x = boundary ? batch.truth[t] : result.predictions[t];
          break;
        case InputPolicy::kMixup:
          if (boundary) {
            std::vector<double> lam(batch.num_nodes()), rest(batch.num_nodes());
            for (std::size_t i = 0; i < batch.num_nodes(); ++i) {
              lam[i] = (*options.lambdas)[boundary_index * batch.num_scenes() + batch.layout.node_scene[i]];
              rest[i] = 1.0 - lam[i];
            }
            x = ops::add(ops::mul_col(result.predictions[t].detach(), Tensor::from({lam.size(), 1}, lam)),
                         ops::mul_col(batch.truth[t], Tensor::from({rest.size(), 1}, rest)));
          } else {
            x = result.predictions[t];
          }
          break;
      }
      if (boundary) ++boundary_index;
    }
    result.inputs.push_back(x);

    // Graph for predicting step t + 1; encode lazily when not supplied.
    const std::size_t g = plan_.graph_for_step(t + 1);
    while (result.graphs.size() <= g) {
      const std::size_t w = result.graphs.size();
      const std::size_t begin = plan_.window_begin(w);
      // Windows inside the history are observed; their inputs equal the truth.
      const bool observed = options.encoder_from_truth || begin + config_.tau <= config_.history;
      const Tensor window = observed ? window_features(batch.truth, begin, config_.tau)
                                     : window_features(result.inputs, begin, config_.tau).detach();
      result.graphs.push_back(encoder_.encode(window, batch.layout, enc_state, options.mode, rng));
    }
    const Tensor m = decoder_.ham_aggregate(dec_state.hidden.back(), batch, result.graphs[g]);

    Tensor eps;
    if (options.output_noise) {
      eps = (*options.output_noise)[t];
    } else if (config_.output_noise) {
      std::vector<double> v(batch.num_nodes() * config_.hidden);
      for (double& e : v) e = rng.normal();
      eps = Tensor::from({batch.num_nodes(), config_.hidden}, std::move(v));
    }
    result.predictions[t + 1] = decoder_.step(dec_state, m, x, batch, eps);
  }
  return result;
}

std::map<std::string, Tensor> Model::records() const {
  auto out = params_.snapshot();
  auto put = [&](const std::string& key, double v) { out["meta.model." + key] = Tensor::scalar(v); };
  put("categories", config_.categories);
  put("history", static_cast<double>(config_.history));
  put("future", static_cast<double>(config_.future));
  put("tau", static_cast<double>(config_.tau));
  put("hidden", static_cast<double>(config_.hidden));
  put("edge_dim", static_cast<double>(config_.edge_dim));
  put("gru_layers", static_cast<double>(config_.gru_layers));
  put("temperature", config_.temperature);
  put("homogeneous", config_.homogeneous ? 1.0 : 0.0);
  put("edge_noise", config_.edge_noise ? 1.0 : 0.0);
  put("output_noise", config_.output_noise ? 1.0 : 0.0);
  put("relation_noise", config_.relation_noise ? 1.0 : 0.0);
  return out;
}

ModelConfig Model::config_from_records(const std::map<std::string, Tensor>& records) {
  auto get = [&](const std::string& key) {
    auto it = records.find("meta.model." + key);
    if (it == records.end() || it->second.size() != 1) throw DataError("checkpoint lacks meta.model." + key);
    return it->second[0];
  };
  auto count = [&](const std::string& key) {
    const double v = get(key);
    if (!(v >= 0.0) || v != std::floor(v)) throw DataError("checkpoint: bad meta.model." + key);
    return static_cast<std::size_t>(v);
  };
  ModelConfig c;
  c.categories = static_cast<int>(count("categories"));
  c.history = count("history");
  c.future = count("future");
  c.tau = count("tau");
  c.hidden = count("hidden");
  c.edge_dim = count("edge_dim");
  c.gru_layers = count("gru_layers");
  c.temperature = get("temperature");
  c.homogeneous = get("homogeneous") != 0.0;
  c.edge_noise = get("edge_noise") != 0.0;
  c.output_noise = get("output_noise") != 0.0;
  c.relation_noise = get("relation_noise") != 0.0;
  return c;
}

void Model::load_records(const std::map<std::string, Tensor>& records) {
  std::map<std::string, Tensor> params;
  for (const auto& [k, v] : records)
    if (!is_meta_key(k)) params.emplace(k, v);
  params_.assign(params);
}

}  // namespace himrae
