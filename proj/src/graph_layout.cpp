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

#include "himrae/graph_layout.hpp"

#include "himrae/errors.hpp"

namespace himrae {

GraphLayout GraphLayout::build(std::span<const std::size_t> agents_per_scene) {
  GraphLayout g;
  g.num_scenes = agents_per_scene.size();
  for (std::size_t s = 0; s < g.num_scenes; ++s) {
    const std::size_t n = agents_per_scene[s];
    if (n < 2) throw ContractError("GraphLayout: every scene needs at least 2 agents");
    g.scene_offset.push_back(g.num_nodes);
    g.scene_size.push_back(n);
    g.edge_offset.push_back(g.src.size());
    for (std::size_t i = 0; i < n; ++i) g.node_scene.push_back(s);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        g.src.push_back(g.num_nodes + i);
        g.dst.push_back(g.num_nodes + j);
        g.edge_scene.push_back(s);
      }
    g.num_nodes += n;
  }
  return g;
}

std::size_t GraphLayout::edge_index(std::size_t scene, std::size_t i, std::size_t j) const {
  const std::size_t n = scene_size.at(scene);
  if (i == j || i >= n || j >= n) throw ContractError("GraphLayout::edge_index: invalid pair");
  return edge_offset[scene] + i * (n - 1) + (j < i ? j : j - 1);
}

std::vector<double> GraphLayout::to_matrix(std::span<const double> edge_values, std::size_t scene) const {
  if (edge_values.size() != num_edges()) throw ShapeError("GraphLayout::to_matrix: wrong edge count");
  const std::size_t n = scene_size.at(scene);
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out[i * n + j] = edge_values[edge_index(scene, i, j)];
  return out;
}

void GraphLayout::from_matrix(std::span<const double> matrix, std::size_t scene,
                              std::span<double> edge_values) const {
  const std::size_t n = scene_size.at(scene);
  if (matrix.size() != n * n || edge_values.size() != num_edges()) {
    throw ShapeError("GraphLayout::from_matrix: wrong sizes");
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) edge_values[edge_index(scene, i, j)] = matrix[i * n + j];
}

}  // namespace himrae
