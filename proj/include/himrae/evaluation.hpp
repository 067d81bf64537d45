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
#include <span>
#include <string>
#include <vector>

#include "himrae/data.hpp"
#include "himrae/model.hpp"

namespace himrae {

/// Per-agent displacement errors.
struct AdeFde {
  std::vector<double> ade;
  std::vector<double> fde;
};

/// `truth` and `predicted` hold [agent][step][axis] over `steps` future
/// steps. Offsets along x and y are multiplied by scale_x / scale_y first
/// (normalised -> source units).
AdeFde ade_fde(std::span<const double> truth, std::span<const double> predicted, std::size_t agents,
               std::size_t steps, double scale_x = 1.0, double scale_y = 1.0);

struct CategoryMetrics {
  int category = 0;
  double min_ade = 0.0, min_fde = 0.0, mean_ade = 0.0, mean_fde = 0.0;
  std::size_t scenes = 0;  // scenes containing the category
};

struct MetricsRecord {
  double min_ade = 0.0, min_fde = 0.0, mean_ade = 0.0, mean_fde = 0.0;
  double avg_entropy = 0.0, avg_density = 0.0;
  /// Reconstruction loss in normalised units, averaged over samples and scenes.
  double recon_loss = 0.0;
  std::vector<CategoryMetrics> per_category;
  std::size_t scenes = 0;
  std::size_t samples = 0;
};

struct EvalOptions {
  std::size_t samples = 20;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Scenes per forward batch. Results do not depend on the thread count,
  /// but they do depend on this value.
  std::size_t chunk = 32;
  Normalizer normalizer;
};

/// One stochastic test-mode rollout of one scene.
struct ScenePrediction {
  std::size_t scene = 0;   // index into the evaluated scene list
  std::size_t sample = 0;
  std::vector<double> future;             // [agent][future step][axis], normalised
  std::vector<std::vector<double>> graphs; // hard z per window, row-major N x N
};

/// K free-running rollouts per scene in test mode; the encoder reads the
/// decoder inputs. Sample k of a chunk uses its own stream, so sample k is
/// the same for every K > k. Output order: scene-major, then sample.
std::vector<ScenePrediction> predict_samples(const Model& model, const std::vector<Scene>& scenes,
                                             const EvalOptions& options);

/// Aggregates per-scene min/mean over samples, then averages scenes equally.
MetricsRecord summarize(const Model& model, const std::vector<Scene>& scenes,
                        const std::vector<ScenePrediction>& predictions, const EvalOptions& options);

MetricsRecord sampled_metrics(const Model& model, const std::vector<Scene>& scenes, const EvalOptions& options);

inline constexpr const char* kMetricsHeader =
    "dataset,strategy,gamma,min_ade,min_fde,mean_ade,mean_fde,avg_entropy,avg_density";
inline constexpr const char* kCategoryHeader = "dataset,strategy,gamma,category,min_ade,min_fde,mean_ade,mean_fde";
inline constexpr const char* kPredictionHeader = "scene_id,sample_id,agent_id,t,x,y";

struct MetricsRow {
  std::string dataset;
  std::string strategy;
  double gamma = 0.0;
  MetricsRecord metrics;
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
void write_category_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
/// Denormalised positions of every future step; t is the zero-based step.
void write_predictions_csv(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                           const std::vector<ScenePrediction>& predictions, std::size_t history,
                           const Normalizer& normalizer);

/// One-sided Mann-Whitney U test (normal approximation with tie and
/// continuity correction): p-value for "a tends to exceed b".
double mann_whitney_greater(std::span<const double> a, std::span<const double> b);

struct GraphQualityOptions {
  std::size_t samples = 20;
  double significance = 0.05;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct GraphQualityReport {
  std::size_t inferred = 0;   // E
  std::size_t redundant = 0;  // E1
  std::size_t missing = 0;    // E2
  std::size_t scenes_evaluated = 0;
  std::size_t scenes_skipped = 0;  // no inferred edge in any window
  double redundant_rate = 0.0;     // E1 / (E - E1 + E2)
  double missing_rate = 0.0;       // E2 / (E - E1 + E2); NaN when the denominator is 0
};

/// Edge ablation audit. Hard graphs are inferred once per scene from ground
/// truth; every (window, edge) is removed (inferred edges) or added (absent
/// pairs) in turn and K rollouts with common random numbers are compared
/// against the unmodified graph on per-sample mean ADE.
GraphQualityReport graph_quality(const Model& model, const std::vector<Scene>& scenes,
                                 const GraphQualityOptions& options);

enum class SelectionHeuristic { kEntropy, kSimilarity };
SelectionHeuristic parse_heuristic(const std::string& name);

struct SelectionResult {
  std::vector<double> z;  // row-major N x N, hard
  std::size_t uncertain = 0;
  bool exhaustive = true;  // false: greedy fallback (> 16 uncertain edges)
};

inline constexpr std::size_t kMaxExhaustiveEdges = 16;

/// Edges with p < low are excluded, p > high included, the rest decided by
/// minimising graph entropy (kEntropy) or the l1 distance to `previous`
/// (kSimilarity). Exhaustive over subsets for up to 16 uncertain edges;
/// ties go to the earliest subset in mask order.
SelectionResult select_graph(std::span<const double> probs, std::size_t n, SelectionHeuristic heuristic,
                             std::span<const double> previous = {}, double low = 0.2, double high = 0.8);

}  // namespace himrae
