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

#include "himrae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "himrae/errors.hpp"
#include "himrae/graph_complexity.hpp"
#include "himrae/parallel.hpp"

namespace himrae {

namespace {

constexpr std::uint64_t kEvalStream = 0xe7a1;
constexpr std::uint64_t kQualityStream = 0x9a17;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// Future positions of scene `s` of `batch` from per-step predictions.
std::vector<double> scene_future(const Batch& batch, const std::vector<Tensor>& steps, std::size_t s,
                                 std::size_t history) {
  const std::size_t n = batch.layout.scene_size[s], off = batch.layout.scene_offset[s];
  const std::size_t future = steps.size() - history;
  std::vector<double> out(n * future * 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < future; ++f) {
      const Tensor& p = steps[history + f];
      out[(i * future + f) * 2] = p.at(off + i, 0);
      out[(i * future + f) * 2 + 1] = p.at(off + i, 1);
    }
  return out;
}

std::vector<double> truth_future(const Scene& scene, std::size_t history) {
  const std::size_t future = scene.steps - history;
  std::vector<double> out(scene.num_agents() * future * 2);
  for (std::size_t i = 0; i < scene.num_agents(); ++i)
    for (std::size_t f = 0; f < future; ++f) {
      out[(i * future + f) * 2] = scene.x(i, history + f);
      out[(i * future + f) * 2 + 1] = scene.y(i, history + f);
    }
  return out;
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

AdeFde ade_fde(std::span<const double> truth, std::span<const double> predicted, std::size_t agents,
               std::size_t steps, double scale_x, double scale_y) {
  if (steps == 0) throw ContractError("ade_fde: no future steps");
  if (truth.size() != agents * steps * 2 || predicted.size() != truth.size()) {
    throw ShapeError("ade_fde: expected " + std::to_string(agents * steps * 2) + " values");
  }
  AdeFde out;
  out.ade.assign(agents, 0.0);
  out.fde.assign(agents, 0.0);
  for (std::size_t i = 0; i < agents; ++i) {
    double acc = 0.0, last = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t k = (i * steps + t) * 2;
      const double dx = (predicted[k] - truth[k]) * scale_x;
      const double dy = (predicted[k + 1] - truth[k + 1]) * scale_y;
      last = std::sqrt(dx * dx + dy * dy);
      acc += last;
    }
    out.ade[i] = acc / static_cast<double>(steps);
    out.fde[i] = last;
  }
  return out;
}

std::vector<ScenePrediction> predict_samples(const Model& model, const std::vector<Scene>& scenes,
                                             const EvalOptions& options) {
  if (options.samples == 0) throw ConfigError("samples must be at least 1");
  if (options.chunk == 0) throw ConfigError("chunk must be at least 1");
  const std::size_t k_total = options.samples;
  const std::size_t chunks = (scenes.size() + options.chunk - 1) / options.chunk;
  const std::size_t history = model.config().history;
  std::vector<ScenePrediction> out(scenes.size() * k_total);
  const RngStream root(options.seed, kEvalStream);

  parallel_for(chunks * k_total, options.threads, [&](std::size_t job) {
    const std::size_t c = job / k_total, k = job % k_total;
    const std::size_t begin = c * options.chunk, end = std::min(scenes.size(), begin + options.chunk);
    std::vector<const Scene*> part;
    for (std::size_t s = begin; s < end; ++s) part.push_back(&scenes[s]);
    const Batch batch = Batch::from_scenes(part, model.config().categories);
    NoGradGuard no_grad;
    RngStream rng = root.derive(c).derive(k);
    RolloutOptions ro;
    ro.mode = Mode::kTest;
    ro.encoder_from_truth = false;
    const RolloutResult r = model.rollout(batch, ro, rng);
    for (std::size_t s = 0; s < part.size(); ++s) {
      ScenePrediction& p = out[(begin + s) * k_total + k];
      p.scene = begin + s;
      p.sample = k;
      p.future = scene_future(batch, r.predictions, s, history);
      for (const GraphSample& g : r.graphs) p.graphs.push_back(batch.layout.to_matrix(g.z.values(), s));
    }
  });
  return out;
}

MetricsRecord summarize(const Model& model, const std::vector<Scene>& scenes,
                        const std::vector<ScenePrediction>& predictions, const EvalOptions& options) {
  const std::size_t k_total = options.samples;
  if (predictions.size() != scenes.size() * k_total) throw ContractError("summarize: prediction count mismatch");
  const std::size_t history = model.config().history;
  const int categories = model.config().categories;
  const double sx = options.normalizer.scale_x(), sy = options.normalizer.scale_y();

  MetricsRecord rec;
  rec.scenes = scenes.size();
  rec.samples = k_total;
  std::vector<CategoryMetrics> cat(static_cast<std::size_t>(categories));
  for (int c = 0; c < categories; ++c) cat[static_cast<std::size_t>(c)].category = c;
  if (scenes.empty()) {
    rec.per_category = cat;
    return rec;
  }

  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene& scene = scenes[s];
    const std::size_t n = scene.num_agents(), future = scene.steps - history;
    const auto truth = truth_future(scene, history);
    std::vector<double> ades(k_total), fdes(k_total), losses(k_total), ents, dens;
    std::vector<std::vector<double>> cat_ade(cat.size(), std::vector<double>(k_total)),
        cat_fde(cat.size(), std::vector<double>(k_total));
    for (std::size_t k = 0; k < k_total; ++k) {
      const ScenePrediction& p = predictions[s * k_total + k];
      const AdeFde e = ade_fde(truth, p.future, n, future, sx, sy);
      ades[k] = mean(e.ade);
      fdes[k] = mean(e.fde);
      double sq = 0.0;
      for (std::size_t q = 0; q < truth.size(); ++q) sq += (truth[q] - p.future[q]) * (truth[q] - p.future[q]);
      losses[k] = sq / static_cast<double>(n * future);
      for (std::size_t c = 0; c < cat.size(); ++c) {
        double a = 0.0, f = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (scene.categories[i] == static_cast<int>(c)) {
            a += e.ade[i];
            f += e.fde[i];
            ++count;
          }
        if (count) {
          cat_ade[c][k] = a / static_cast<double>(count);
          cat_fde[c][k] = f / static_cast<double>(count);
        }
      }
      for (const auto& z : p.graphs) {
        ents.push_back(graph_entropy(z, n));
        dens.push_back(r_density(z, n));
      }
    }
    rec.min_ade += *std::min_element(ades.begin(), ades.end());
    rec.min_fde += *std::min_element(fdes.begin(), fdes.end());
    rec.mean_ade += mean(ades);
    rec.mean_fde += mean(fdes);
    rec.recon_loss += mean(losses);
    rec.avg_entropy += mean(ents);
    rec.avg_density += mean(dens);
    for (std::size_t c = 0; c < cat.size(); ++c) {
      if (std::find(scene.categories.begin(), scene.categories.end(), static_cast<int>(c)) == scene.categories.end())
        continue;
      cat[c].min_ade += *std::min_element(cat_ade[c].begin(), cat_ade[c].end());
      cat[c].min_fde += *std::min_element(cat_fde[c].begin(), cat_fde[c].end());
      cat[c].mean_ade += mean(cat_ade[c]);
      cat[c].mean_fde += mean(cat_fde[c]);
      ++cat[c].scenes;
    }
  }
  const double inv = 1.0 / static_cast<double>(scenes.size());
  for (double* v : {&rec.min_ade, &rec.min_fde, &rec.mean_ade, &rec.mean_fde, &rec.recon_loss, &rec.avg_entropy,
                    &rec.avg_density})
    *v *= inv;
  for (auto& c : cat)
    if (c.scenes) {
      const double ic = 1.0 / static_cast<double>(c.scenes);
      c.min_ade *= ic;
      c.min_fde *= ic;
      c.mean_ade *= ic;
      c.mean_fde *= ic;
    }
  rec.per_category = std::move(cat);
  return rec;
}

MetricsRecord sampled_metrics(const Model& model, const std::vector<Scene>& scenes, const EvalOptions& options) {
  return summarize(model, scenes, predict_samples(model, scenes, options), options);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  auto out = open_out(path);
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.dataset << ',' << r.strategy << ',' << fmt(r.gamma) << ',' << fmt(m.min_ade) << ',' << fmt(m.min_fde)
        << ',' << fmt(m.mean_ade) << ',' << fmt(m.mean_fde) << ',' << fmt(m.avg_entropy) << ','
        << fmt(m.avg_density) << '\n';
  }
}

void write_category_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  auto out = open_out(path);
  out << kCategoryHeader << '\n';
  for (const auto& r : rows)
    for (const auto& c : r.metrics.per_category) {
      if (!c.scenes) continue;
      out << r.dataset << ',' << r.strategy << ',' << fmt(r.gamma) << ',' << c.category << ',' << fmt(c.min_ade)
          << ',' << fmt(c.min_fde) << ',' << fmt(c.mean_ade) << ',' << fmt(c.mean_fde) << '\n';
    }
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                           const std::vector<ScenePrediction>& predictions, std::size_t history,
                           const Normalizer& normalizer) {
  auto out = open_out(path);
  out << kPredictionHeader << '\n';
  for (const auto& p : predictions) {
    const Scene& scene = scenes.at(p.scene);
    const std::size_t n = scene.num_agents(), future = scene.steps - history;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < future; ++f) {
        const std::size_t k = (i * future + f) * 2;
        out << scene.scene_id << ',' << p.sample << ',' << i << ',' << history + f << ','
            << fmt(normalizer.denormalize_x(p.future[k])) << ',' << fmt(normalizer.denormalize_y(p.future[k + 1]))
            << '\n';
      }
  }
}

double mann_whitney_greater(std::span<const double> a, std::span<const double> b) {
  const std::size_t n1 = a.size(), n2 = b.size();
  if (n1 == 0 || n2 == 0) throw ContractError("mann_whitney_greater: empty sample");
  struct Item {
    double v;
    bool first;
  };
  std::vector<Item> all;
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& x, const Item& y) { return x.v < y.v; });
  const double n = static_cast<double>(n1 + n2);
  double rank_sum = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].first) rank_sum += avg_rank;
    i = j;
  }
  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);
  const double u = rank_sum - d1 * (d1 + 1.0) / 2.0;
  const double mu = d1 * d2 / 2.0;
  const double var = d1 * d2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  const double zscore = (u - mu - 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(zscore / std::sqrt(2.0));
}

GraphQualityReport graph_quality(const Model& model, const std::vector<Scene>& scenes,
                                 const GraphQualityOptions& options) {
  if (options.samples < 2) throw ConfigError("graph quality needs at least 2 samples");
  if (!(options.significance > 0.0 && options.significance < 1.0)) throw ConfigError("significance outside (0, 1)");
  const std::size_t history = model.config().history;
  const RngStream root(options.seed, kQualityStream);

  struct SceneTally {
    std::size_t inferred = 0, redundant = 0, missing = 0;
    bool skipped = false;
  };
  std::vector<SceneTally> tally(scenes.size());

  parallel_for(scenes.size(), options.threads, [&](std::size_t s) {
    NoGradGuard no_grad;
    const Batch batch = Batch::from_scene(scenes[s], model.config().categories);
    RngStream rng = root.derive(s);
    RngStream graph_rng = rng.derive(0);
    const std::vector<GraphSample> graphs = model.encode_truth(batch, Mode::kTest, graph_rng);
    std::size_t inferred = 0;
    for (const auto& g : graphs)
      for (double z : g.z.values()) inferred += z > 0.5 ? 1 : 0;
    if (inferred == 0) {
      tally[s].skipped = true;
      return;
    }
    std::vector<std::vector<Tensor>> noise;
    for (std::size_t k = 0; k < options.samples; ++k) {
      RngStream nr = rng.derive(1 + k);
      noise.push_back(model.draw_output_noise(batch, nr));
    }
    const auto truth = truth_future(scenes[s], history);
    const std::size_t n = scenes[s].num_agents(), future = scenes[s].steps - history;
    auto errors = [&](const std::vector<GraphSample>& gs) {
      std::vector<double> out;
      for (std::size_t k = 0; k < options.samples; ++k) {
        RolloutOptions ro;
        ro.mode = Mode::kTest;
        ro.graphs = &gs;
        ro.output_noise = &noise[k];
        RngStream unused = rng.derive(1000 + k);
        const auto r = model.rollout(batch, ro, unused);
        out.push_back(mean(ade_fde(truth, scene_future(batch, r.predictions, 0, history), n, future).ade));
      }
      return out;
    };
    const auto base = errors(graphs);
    SceneTally& t = tally[s];
    t.inferred = inferred;
    for (std::size_t w = 0; w < graphs.size(); ++w)
      for (std::size_t e = 0; e < batch.layout.num_edges(); ++e) {
        std::vector<GraphSample> modified = graphs;
        Tensor z = graphs[w].z.clone();
        const bool present = z[e] > 0.5;
        z.mutable_values()[e] = present ? 0.0 : 1.0;
        modified[w].z = z;
        const auto alt = errors(modified);
        if (present) {
          if (mann_whitney_greater(alt, base) >= options.significance) ++t.redundant;
        } else if (mann_whitney_greater(base, alt) < options.significance) {
          ++t.missing;
        }
      }
  });

  GraphQualityReport rep;
  for (const auto& t : tally) {
    if (t.skipped) {
      ++rep.scenes_skipped;
      continue;
    }
    ++rep.scenes_evaluated;
    rep.inferred += t.inferred;
    rep.redundant += t.redundant;
    rep.missing += t.missing;
  }
  const double useful = static_cast<double>(rep.inferred) - static_cast<double>(rep.redundant) +
                        static_cast<double>(rep.missing);
  if (useful > 0.0) {
    rep.redundant_rate = static_cast<double>(rep.redundant) / useful;
    rep.missing_rate = static_cast<double>(rep.missing) / useful;
  } else {
    rep.redundant_rate = rep.missing_rate = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

SelectionHeuristic parse_heuristic(const std::string& name) {
  if (name == "entropy") return SelectionHeuristic::kEntropy;
  if (name == "similarity") return SelectionHeuristic::kSimilarity;
  throw ConfigError("unknown selection heuristic '" + name + "' (expected entropy or similarity)");
}

SelectionResult select_graph(std::span<const double> probs, std::size_t n, SelectionHeuristic heuristic,
                             std::span<const double> previous, double low, double high) {
  if (n < 2 || probs.size() != n * n) throw ShapeError("select_graph: expected N x N probabilities");
  if (!(low >= 0.0 && low <= high && high <= 1.0)) throw ConfigError("select_graph: need 0 <= low <= high <= 1");
  if (heuristic == SelectionHeuristic::kSimilarity && previous.size() != n * n) {
    throw ContractError("select_graph: similarity heuristic needs the previous N x N graph");
  }
  SelectionResult res;
  res.z.assign(n * n, 0.0);
  std::vector<std::size_t> uncertain;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = probs[i * n + j];
      if (p < 0.0 || p > 1.0) throw ContractError("select_graph: probability outside [0, 1]");
      if (p > high) {
        res.z[i * n + j] = 1.0;
      } else if (p >= low) {
        uncertain.push_back(i * n + j);
      }
    }
  res.uncertain = uncertain.size();

  auto objective = [&](const std::vector<double>& z) {
    if (heuristic == SelectionHeuristic::kEntropy) return graph_entropy(z, n);
    double d = 0.0;
    for (std::size_t q = 0; q < z.size(); ++q) d += std::abs(z[q] - previous[q]);
    return d;
  };

  if (uncertain.size() <= kMaxExhaustiveEdges) {
    std::vector<double> best = res.z, trial = res.z;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << uncertain.size()); ++mask) {
      for (std::size_t b = 0; b < uncertain.size(); ++b) trial[uncertain[b]] = (mask >> b) & 1u ? 1.0 : 0.0;
      const double v = objective(trial);
      if (v < best_value) {
        best_value = v;
        best = trial;
      }
    }
    res.z = std::move(best);
    return res;
  }
  res.exhaustive = false;
  for (std::size_t q : uncertain) {
    std::vector<double> with = res.z;
    with[q] = 1.0;
    if (objective(with) <= objective(res.z)) res.z = std::move(with);
  }
  return res;
}

}  // namespace himrae
