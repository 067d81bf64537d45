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

#include "himrae/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "himrae/errors.hpp"

namespace himrae {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

std::size_t as_size(const std::string& k, const std::string& v) { return static_cast<std::size_t>(to_uint(k, v)); }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.seed", [](RunConfig& c, const auto& k, const auto& v) { c.seed = to_uint(k, v); }},
      {"run.threads", [](RunConfig& c, const auto& k, const auto& v) { c.threads = as_size(k, v); }},

      {"data.name", [](RunConfig& c, const auto&, const auto& v) { c.data.name = v; }},
      {"data.n_scenes", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.n_scenes = as_size(k, v); }},
      {"data.min_agents", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.min_agents = as_size(k, v); }},
      {"data.max_agents", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.max_agents = as_size(k, v); }},
      {"data.categories",
       [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.categories = static_cast<int>(to_uint(k, v)); }},
      {"data.history", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.history = as_size(k, v); }},
      {"data.future", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.future = as_size(k, v); }},
      {"data.coupling", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.coupling = to_list(k, v); }},
      {"data.damping", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.damping = to_list(k, v); }},
      {"data.edge_probability",
       [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.edge_probability = to_double(k, v); }},
      {"data.dt", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.dt = to_double(k, v); }},
      {"data.substeps", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.substeps = as_size(k, v); }},
      {"data.box", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.box = to_double(k, v); }},
      {"data.speed", [](RunConfig& c, const auto& k, const auto& v) { c.data.synthetic.speed = to_double(k, v); }},
      {"data.train_ratio", [](RunConfig& c, const auto& k, const auto& v) { c.data.train_ratio = to_double(k, v); }},
      {"data.val_ratio", [](RunConfig& c, const auto& k, const auto& v) { c.data.val_ratio = to_double(k, v); }},
      {"data.test_ratio", [](RunConfig& c, const auto& k, const auto& v) { c.data.test_ratio = to_double(k, v); }},

      {"model.tau", [](RunConfig& c, const auto& k, const auto& v) { c.model.tau = as_size(k, v); }},
      {"model.hidden", [](RunConfig& c, const auto& k, const auto& v) { c.model.hidden = as_size(k, v); }},
      {"model.edge_dim", [](RunConfig& c, const auto& k, const auto& v) { c.model.edge_dim = as_size(k, v); }},
      {"model.gru_layers", [](RunConfig& c, const auto& k, const auto& v) { c.model.gru_layers = as_size(k, v); }},
      {"model.temperature", [](RunConfig& c, const auto& k, const auto& v) { c.model.temperature = to_double(k, v); }},
      {"model.homogeneous", [](RunConfig& c, const auto& k, const auto& v) { c.model.homogeneous = to_bool(k, v); }},
      {"model.edge_noise", [](RunConfig& c, const auto& k, const auto& v) { c.model.edge_noise = to_bool(k, v); }},
      {"model.output_noise", [](RunConfig& c, const auto& k, const auto& v) { c.model.output_noise = to_bool(k, v); }},
      {"model.relation_noise",
       [](RunConfig& c, const auto& k, const auto& v) { c.model.relation_noise = to_bool(k, v); }},

      {"train.epochs", [](RunConfig& c, const auto& k, const auto& v) { c.train.epochs = as_size(k, v); }},
      {"train.batch_size", [](RunConfig& c, const auto& k, const auto& v) { c.train.batch_size = as_size(k, v); }},
      {"train.learning_rate", [](RunConfig& c, const auto& k, const auto& v) { c.train.learning_rate = to_double(k, v); }},
      {"train.gamma", [](RunConfig& c, const auto& k, const auto& v) { c.train.gamma = to_double(k, v); }},
      {"train.penalty", [](RunConfig& c, const auto&, const auto& v) { c.train.penalty = parse_penalty(v); }},
      {"train.strategy", [](RunConfig& c, const auto&, const auto& v) { c.train.strategy = parse_strategy(v); }},
      {"train.alpha_init", [](RunConfig& c, const auto& k, const auto& v) { c.train.alpha_init = to_double(k, v); }},
      {"train.alpha_decay_interval",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.alpha_decay_interval = as_size(k, v); }},
      {"train.alpha_decay_factor",
       [](RunConfig& c, const auto& k, const auto& v) { c.train.alpha_decay_factor = to_double(k, v); }},
      {"train.alpha_floor", [](RunConfig& c, const auto& k, const auto& v) { c.train.alpha_floor = to_double(k, v); }},
      {"train.val_samples", [](RunConfig& c, const auto& k, const auto& v) { c.train.val_samples = as_size(k, v); }},

      {"eval.samples", [](RunConfig& c, const auto& k, const auto& v) { c.eval.samples = as_size(k, v); }},
      {"eval.significance", [](RunConfig& c, const auto& k, const auto& v) { c.eval.significance = to_double(k, v); }},
      {"eval.quality_scenes", [](RunConfig& c, const auto& k, const auto& v) { c.eval.quality_scenes = as_size(k, v); }},
      {"eval.heuristic", [](RunConfig& c, const auto&, const auto& v) { c.eval.heuristic = v; }},
      {"eval.low", [](RunConfig& c, const auto& k, const auto& v) { c.eval.low = to_double(k, v); }},
      {"eval.high", [](RunConfig& c, const auto& k, const auto& v) { c.eval.high = to_double(k, v); }},
      {"eval.gammas", [](RunConfig& c, const auto& k, const auto& v) { c.eval.gammas = to_list(k, v); }},
      {"eval.plots", [](RunConfig& c, const auto& k, const auto& v) { c.eval.plots = as_size(k, v); }},
  };
  return table;
}

}  // namespace

void RunConfig::finalize() {
  data.synthetic.seed = seed;
  train.seed = seed;
  model.init_seed = seed;
  model.categories = data.synthetic.categories;
  model.history = data.synthetic.history;
  model.future = data.synthetic.future;
  data.synthetic.finalize();
  model.validate();
  train.validate();
  for (double r : {data.train_ratio, data.val_ratio, data.test_ratio})
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
  if (std::abs(data.train_ratio + data.val_ratio + data.test_ratio - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  if (eval.samples == 0) throw ConfigError("eval.samples must be positive");
  if (!(eval.significance > 0.0 && eval.significance < 1.0)) throw ConfigError("eval.significance outside (0, 1)");
  if (eval.heuristic != "entropy" && eval.heuristic != "similarity") {
    throw ConfigError("eval.heuristic must be entropy or similarity");
  }
  if (!(0.0 <= eval.low && eval.low <= eval.high && eval.high <= 1.0)) throw ConfigError("need 0 <= low <= high <= 1");
  for (double g : eval.gammas)
    if (!(g >= 0.0)) throw ConfigError("eval.gammas must be non-negative");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::string section = "run";
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  static const char* kSections[] = {"run", "data", "model", "train", "eval"};
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections)) {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace himrae
