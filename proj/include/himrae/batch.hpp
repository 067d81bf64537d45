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
#include <string>
#include <vector>

#include "himrae/data.hpp"
#include "himrae/graph_layout.hpp"
#include "himrae/tensor.hpp"

namespace himrae {

/// Several scenes stacked into one block-diagonal node set.
struct Batch {
  GraphLayout layout;
  std::vector<std::string> scene_ids;
  std::vector<int> node_category;
  std::vector<std::vector<std::size_t>> category_rows;  // nodes of each category
  std::size_t steps = 0;
  std::vector<Tensor> truth;  // per step: [nodes x 2]

  /// All scenes must share the step count; categories must lie in [0, C).
  static Batch from_scenes(const std::vector<const Scene*>& scenes, int categories);
  static Batch from_scene(const Scene& scene, int categories) { return from_scenes({&scene}, categories); }

  std::size_t num_nodes() const { return layout.num_nodes; }
  std::size_t num_scenes() const { return layout.num_scenes; }
};

}  // namespace himrae
