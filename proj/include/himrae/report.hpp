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
#include <filesystem>
#include <string>
#include <vector>

#include "himrae/data.hpp"
#include "himrae/evaluation.hpp"

namespace himrae {

inline constexpr const char* kGraphStatsHeader = "scene_id,sample_id,window,num_agents,edges,entropy,density,max_in_degree";

/// One row per (scene, sample, window) of the hard graphs in `predictions`.
void write_graph_stats_csv(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                           const std::vector<ScenePrediction>& predictions);

/// Standalone SVG line plot of one scene in normalised coordinates: history
/// (solid), true future (dashed) and each predicted sample (thin), coloured
/// by agent.
std::string trajectory_svg(const Scene& scene, const std::vector<const ScenePrediction*>& samples,
                           std::size_t history);

}  // namespace himrae
