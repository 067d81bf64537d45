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
#include <optional>
#include <string>
#include <vector>

#include "himrae/rng.hpp"

namespace himrae {

/// One multi-agent episode. Positions are stored agent-major:
/// positions[(agent * steps + t) * 2 + axis].
struct Scene {
  std::string scene_id;
  std::vector<int> categories;
  std::size_t steps = 0;
  std::vector<double> positions;
  /// Row-major N x N, entry (i, j) = 1 when i influences j. Synthetic only.
  std::optional<std::vector<std::uint8_t>> truth_graph;

  std::size_t num_agents() const { return categories.size(); }
  double x(std::size_t agent, std::size_t t) const { return positions[(agent * steps + t) * 2]; }
  double y(std::size_t agent, std::size_t t) const { return positions[(agent * steps + t) * 2 + 1]; }
  double& x(std::size_t agent, std::size_t t) { return positions[(agent * steps + t) * 2]; }
  double& y(std::size_t agent, std::size_t t) { return positions[(agent * steps + t) * 2 + 1]; }

  /// Throws DataError when the arrays disagree or N < 2.
  void validate() const;
};

bool operator==(const Scene& a, const Scene& b);

/// Min-max map of each axis onto [-1, 1].
struct Normalizer {
  double min_x = -1.0, max_x = 1.0, min_y = -1.0, max_y = 1.0;

  /// Throws ConfigError on a degenerate range.
  void validate() const;
  /// Bounds of every position in `scenes`.
  static Normalizer fit(const std::vector<Scene>& scenes);

  double normalize_x(double x) const { return 2.0 * (x - min_x) / (max_x - min_x) - 1.0; }
  double normalize_y(double y) const { return 2.0 * (y - min_y) / (max_y - min_y) - 1.0; }
  double denormalize_x(double u) const { return (u + 1.0) * 0.5 * (max_x - min_x) + min_x; }
  double denormalize_y(double v) const { return (v + 1.0) * 0.5 * (max_y - min_y) + min_y; }
  /// Multiplier converting a normalised length along x into source units.
  double scale_x() const { return 0.5 * (max_x - min_x); }
  double scale_y() const { return 0.5 * (max_y - min_y); }

  /// Bounds pushed outwards by `fraction` of the range on each side.
  Normalizer widened(double fraction) const;

  void save(const std::filesystem::path& path) const;
  static Normalizer load(const std::filesystem::path& path);
};

/// Raw -> normalised. Points outside the bounds raise DataError (no clamping).
Scene normalize(const Scene& raw, const Normalizer& normalizer);
Scene denormalize(const Scene& scene, const Normalizer& normalizer);

/// Tiling of the T_h + T_f steps into windows of tau steps.
struct WindowPlan {
  std::size_t history = 0;
  std::size_t future = 0;
  std::size_t tau = 0;
  std::size_t windows = 0;   // M = floor((T_h + T_f) / tau)
  std::size_t residual = 0;  // (T_h + T_f) - M * tau

  std::size_t total_steps() const { return history + future; }
  /// Zero-based window holding zero-based step t; steps in the residual
  /// fragment report index `windows`.
  std::size_t window_of(std::size_t t) const { return t / tau; }
  /// First zero-based step of window w.
  std::size_t window_begin(std::size_t w) const { return w * tau; }
  /// Window whose inferred graph drives the prediction of zero-based step t
  /// (t >= 1): the previous full window, or window 0 while inside it.
  /// Residual steps therefore reuse the last full window's graph.
  std::size_t graph_for_step(std::size_t t) const;
};

/// Throws ConfigError when tau == 0 or tau > T_h.
WindowPlan plan_windows(std::size_t history, std::size_t future, std::size_t tau);

/// CSV with header "scene_id,agent_id,category,t,x,y"; t is zero-based.
std::vector<Scene> load_csv(const std::filesystem::path& path, int num_categories);
void save_csv(const std::vector<Scene>& scenes, const std::filesystem::path& path);

/// Edge list "scene_id,src,dst" for scenes carrying a truth graph.
void save_truth_graphs(const std::vector<Scene>& scenes, const std::filesystem::path& path);
/// Attaches truth graphs to matching scenes (by id); scenes without edges get
/// an all-zero graph.
void load_truth_graphs(std::vector<Scene>& scenes, const std::filesystem::path& path);

struct SyntheticConfig {
  std::size_t n_scenes = 200;
  std::size_t min_agents = 4;
  std::size_t max_agents = 8;
  int categories = 3;
  std::size_t history = 5;
  std::size_t future = 10;
  /// coupling[c_src][c_dst], row-major C x C.
  std::vector<double> coupling;
  /// Per-category velocity damping.
  std::vector<double> damping;
  double edge_probability = 0.3;
  double dt = 0.1;
  /// Integration steps per recorded frame.
  std::size_t substeps = 4;
  /// Initial positions uniform in [-box, box]^2; velocities N(0, speed^2).
  double box = 5.0;
  double speed = 0.5;
  std::uint64_t seed = 0;

  /// Fills coupling/damping with the defaults for `categories` when empty and
  /// checks all ranges (ConfigError).
  void finalize();
};

/// Raw (unnormalised) simulation of one scene with a fixed truth graph.
/// Throws NumericalError when any coordinate exceeds 1e6.
Scene simulate_scene(const SyntheticConfig& config, const std::string& scene_id, const std::vector<int>& categories,
                     const std::vector<std::uint8_t>& graph, RngStream& rng);

struct SyntheticDataset {
  std::vector<Scene> scenes;  // normalised by `normalizer`
  Normalizer normalizer;      // global bounds of the raw simulation
};

/// Raw scenes in source units.
std::vector<Scene> generate_raw(SyntheticConfig config);
SyntheticDataset generate_synthetic(SyntheticConfig config);

struct DatasetSplit {
  std::vector<Scene> train, val, test;
};

/// Seeded shuffle, then the first round(train_ratio * n) scenes go to train,
/// the next round(val_ratio * n) to val and the rest to test.
DatasetSplit split_dataset(const std::vector<Scene>& scenes, double train_ratio, double val_ratio,
                           std::uint64_t seed);

}  // namespace himrae
