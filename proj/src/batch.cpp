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

#include "himrae/batch.hpp"

#include "himrae/errors.hpp"

namespace himrae {

Batch Batch::from_scenes(const std::vector<const Scene*>& scenes, int categories) {
  if (scenes.empty()) throw ContractError("Batch: no scenes");
  Batch b;
  b.steps = scenes.front()->steps;
  std::vector<std::size_t> sizes;
  for (const Scene* s : scenes) {
    s->validate();
    if (s->steps != b.steps) throw DataError("Batch: scenes differ in length");
    sizes.push_back(s->num_agents());
    b.scene_ids.push_back(s->scene_id);
  }
  b.layout = GraphLayout::build(sizes);
  b.category_rows.resize(static_cast<std::size_t>(categories));
  for (const Scene* s : scenes)
    for (int c : s->categories) {
      if (c < 0 || c >= categories) {
        throw ConfigError("scene " + s->scene_id + ": category " + std::to_string(c) + " outside [0, " +
                          std::to_string(categories) + ")");
      }
      b.category_rows[static_cast<std::size_t>(c)].push_back(b.node_category.size());
      b.node_category.push_back(c);
    }
  for (std::size_t t = 0; t < b.steps; ++t) {
    std::vector<double> v;
    v.reserve(b.num_nodes() * 2);
    for (const Scene* s : scenes)
      for (std::size_t i = 0; i < s->num_agents(); ++i) {
        v.push_back(s->x(i, t));
        v.push_back(s->y(i, t));
      }
    b.truth.push_back(Tensor::from({b.num_nodes(), 2}, std::move(v)));
  }
  return b;
}

}  // namespace himrae
