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
#include <string>
#include <vector>

#include "himrae/data.hpp"
#include "himrae/model_config.hpp"
#include "himrae/training.hpp"

namespace himrae {

struct DataSection {
  SyntheticConfig synthetic;
  double train_ratio = 0.65;
  double val_ratio = 0.10;
  double test_ratio = 0.25;
  std::string name = "synthetic";
};

struct EvalSection {
  std::size_t samples = 20;
  double significance = 0.05;
  /// Scenes audited by the edge ablation (0 = all).
  std::size_t quality_scenes = 10;
  std::string heuristic = "entropy";
  double low = 0.2;
  double high = 0.8;
  std::vector<double> gammas = {1e-5, 1e-4, 1e-3, 1e-2};
  /// Scenes drawn as SVG trajectory plots by analyze-graphs.
  std::size_t plots = 3;
};

/// Sectioned "key = value" configuration ([run], [data], [model], [train],
/// [eval]); '#' starts a comment. Unknown sections and keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: all available cores
  DataSection data;
  ModelConfig model;
  TrainConfig train;
  EvalSection eval;

  /// Propagates the seed and the shared data/model dimensions, then checks
  /// every section (ConfigError).
  void finalize();
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace himrae
