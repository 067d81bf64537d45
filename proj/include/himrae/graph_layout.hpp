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
#include <span>
#include <vector>

namespace himrae {

/// Block-diagonal batching of several scenes into one node set. Each scene
/// contributes every ordered pair (i, j), i != j, as a directed edge; scenes
/// are disconnected components. Edges of a scene are contiguous, ordered by
/// source then target.
struct GraphLayout {
  std::size_t num_nodes = 0;
  std::size_t num_scenes = 0;
  std::vector<std::size_t> node_scene;
  std::vector<std::size_t> scene_offset;  // first node of each scene
  std::vector<std::size_t> scene_size;    // agents per scene
  std::vector<std::size_t> edge_offset;   // first edge of each scene
  std::vector<std::size_t> src, dst;      // global node ids
  std::vector<std::size_t> edge_scene;

  static GraphLayout build(std::span<const std::size_t> agents_per_scene);
  std::size_t num_edges() const { return src.size(); }
  /// Global edge id of local pair (i, j) in scene s.
  std::size_t edge_index(std::size_t scene, std::size_t i, std::size_t j) const;

  /// Edge values of one scene as a row-major N x N matrix, zero diagonal.
  std::vector<double> to_matrix(std::span<const double> edge_values, std::size_t scene) const;
  /// Inverse of to_matrix: writes the off-diagonal entries into edge_values.
  void from_matrix(std::span<const double> matrix, std::size_t scene, std::span<double> edge_values) const;
};

}  // namespace himrae
