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

// himrae: data generation, training, evaluation, graph analysis and theory
// checks from one binary. Exit codes: 0 ok, 1 config, 2 data, 3 numerical,
// 4 theory-check violation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "himrae/checkpoint.hpp"
#include "himrae/config.hpp"
#include "himrae/errors.hpp"
#include "himrae/evaluation.hpp"
#include "himrae/model.hpp"
#include "himrae/parallel.hpp"
#include "himrae/report.hpp"
#include "himrae/theory.hpp"
#include "himrae/training.hpp"

namespace fs = std::filesystem;
using namespace himrae;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitTheory = 4;

// Margin added around the training-split bounds so that val/test points stay
// inside the normaliser.
constexpr double kNormalizerMargin = 0.25;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f, const std::string& default_out) {
  f.out = default_out;
  app->add_option("--config", f.config, "Configuration file (sectioned key = value)");
  app->add_option("--seed", f.seed, "Seed overriding run.seed");
  app->add_option("--threads", f.threads, "Worker threads (default: available cores)");
  app->add_option("--out", f.out, "Output directory")->capture_default_str();
}

RunConfig resolve(const CommonFlags& f, const std::optional<std::string>& strategy = std::nullopt,
                  const std::optional<double>& gamma = std::nullopt) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (strategy) cfg.train.strategy = parse_strategy(*strategy);
  if (gamma) cfg.train.gamma = *gamma;
  cfg.finalize();
  if (cfg.threads == 0) cfg.threads = default_threads();
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<Scene> load_split(const fs::path& dir, const std::string& split, int categories,
                              const Normalizer& normalizer) {
  const fs::path csv = dir / (split + ".csv");
  if (!fs::exists(csv)) throw DataError("missing dataset file " + csv.string());
  std::vector<Scene> raw = load_csv(csv, categories);
  if (fs::exists(dir / "truth_graphs.csv")) load_truth_graphs(raw, dir / "truth_graphs.csv");
  std::vector<Scene> out;
  for (const auto& s : raw) out.push_back(normalize(s, normalizer));
  return out;
}

Normalizer load_normalizer(const fs::path& dir) {
  const fs::path p = dir / "normalizer.txt";
  if (!fs::exists(p)) throw DataError("missing normalisation sidecar " + p.string());
  return Normalizer::load(p);
}

void check_lengths(const std::vector<Scene>& scenes, const ModelConfig& m) {
  for (const auto& s : scenes)
    if (s.steps != m.steps()) {
      throw DataError("scene " + s.scene_id + " has " + std::to_string(s.steps) + " steps, expected T_h + T_f = " +
                      std::to_string(m.steps()));
    }
}

int cmd_gen_data(const CommonFlags& f) {
  const RunConfig cfg = resolve(f);
  const fs::path out(f.out);
  ensure_dir(out);
  const auto raw = generate_raw(cfg.data.synthetic);
  const auto split = split_dataset(raw, cfg.data.train_ratio, cfg.data.val_ratio, cfg.seed);
  if (split.train.empty()) throw ConfigError("training split is empty; raise n_scenes or train_ratio");
  const Normalizer norm = Normalizer::fit(split.train).widened(kNormalizerMargin);
  for (const auto* part : {&split.val, &split.test})
    for (const auto& s : *part) normalize(s, norm);
  save_csv(split.train, out / "train.csv");
  save_csv(split.val, out / "val.csv");
  save_csv(split.test, out / "test.csv");
  norm.save(out / "normalizer.txt");
  save_truth_graphs(raw, out / "truth_graphs.csv");
  std::cout << "wrote " << split.train.size() << "/" << split.val.size() << "/" << split.test.size()
            << " train/val/test scenes to " << out.string() << "\n";
  return 0;
}

TrainResult run_training(const RunConfig& cfg, const fs::path& data, const fs::path& out,
                         const std::optional<std::string>& resume, bool verbose) {
  ensure_dir(out);
  const Normalizer norm = load_normalizer(data);
  const auto train_scenes = load_split(data, "train", cfg.model.categories, norm);
  const auto val_scenes = load_split(data, "val", cfg.model.categories, norm);
  check_lengths(train_scenes, cfg.model);
  check_lengths(val_scenes, cfg.model);
  Model model(cfg.model);
  TrainOptions opt;
  opt.checkpoint_path = out / "checkpoint.hmra";
  opt.log_path = out / "epochs.csv";
  if (resume) opt.resume = fs::path(*resume);
  opt.normalizer = norm;
  opt.threads = cfg.threads;
  if (verbose) {
    opt.on_epoch = [](const EpochRecord& r) {
      std::cout << "epoch " << r.epoch << "  train " << r.train_loss << "  val " << r.val_loss << "  val_ade "
                << r.val_ade << "  entropy " << r.entropy << "\n"
                << std::flush;
    };
  }
  return train(model, cfg.train, train_scenes, val_scenes, opt);
}

struct Loaded {
  std::unique_ptr<Model> model;
  Normalizer normalizer;
  std::string strategy = "unknown";
  double gamma = 0.0;
};

Loaded load_model(const fs::path& checkpoint) {
  const auto rec = load_checkpoint(checkpoint);
  Loaded l;
  ModelConfig mc = Model::config_from_records(rec);
  l.model = std::make_unique<Model>(mc);
  l.model->load_records(rec);
  l.normalizer = checkpoint_normalizer(rec);
  if (auto it = rec.find("meta.train.strategy"); it != rec.end()) {
    l.strategy = to_string(static_cast<Strategy>(static_cast<int>(it->second[0])));
  }
  if (auto it = rec.find("meta.train.gamma"); it != rec.end()) l.gamma = it->second[0];
  return l;
}

int cmd_evaluate(const CommonFlags& f, const std::string& checkpoint, const std::string& data,
                 const std::string& split, std::optional<std::size_t> samples) {
  const RunConfig cfg = resolve(f);
  const fs::path out(f.out);
  ensure_dir(out);
  Loaded l = load_model(checkpoint);
  const auto scenes = load_split(data, split, l.model->config().categories, l.normalizer);
  check_lengths(scenes, l.model->config());
  EvalOptions eo;
  eo.samples = samples.value_or(cfg.eval.samples);
  eo.seed = cfg.seed;
  eo.threads = cfg.threads;
  eo.normalizer = l.normalizer;
  const auto preds = predict_samples(*l.model, scenes, eo);
  const MetricsRecord m = summarize(*l.model, scenes, preds, eo);
  const std::vector<MetricsRow> rows{{cfg.data.name, l.strategy, l.gamma, m}};
  write_metrics_csv(out / "metrics.csv", rows);
  write_category_csv(out / "metrics_by_category.csv", rows);
  write_predictions_csv(out / "predictions.csv", scenes, preds, l.model->config().history, l.normalizer);
  std::cout << "minADE " << m.min_ade << "  minFDE " << m.min_fde << "  meanADE " << m.mean_ade << "  meanFDE "
            << m.mean_fde << "  entropy " << m.avg_entropy << "  density " << m.avg_density << "\n";
  return 0;
}

int cmd_verify_theory(const CommonFlags& f, const std::string& check, std::size_t max_n, std::size_t trials) {
  const RunConfig cfg = resolve(f);
  if (check != "all" && check != "entropy" && check != "bounds" && check != "majorization") {
    throw ConfigError("--check must be entropy, bounds, majorization or all");
  }
  bool ok = true;
  if (check == "all" || check == "entropy") {
    std::printf("N,|E|,closed_form_min,brute_force_min,match\n");
    for (const auto& r : entropy_minimizer_table(max_n)) {
      std::printf("%zu,%zu,%.17g,%.17g,%s\n", r.n, r.edges, r.closed_form, r.brute_force,
                  r.match ? "yes" : "NO");
      ok = ok && r.match;
    }
    const bool mono = min_entropy_monotone(std::max<std::size_t>(max_n, 8));
    std::printf("min entropy non-decreasing in |E| (N <= %zu): %s\n", std::max<std::size_t>(max_n, 8),
                mono ? "yes" : "NO");
    ok = ok && mono;
  }
  if (check == "all" || check == "majorization") {
    RngStream rng(cfg.seed, 0x41f);
    const HlpReport r = verify_hlp_pairs(trials, rng);
    std::printf("majorization: %zu pairs, %zu violations, %zu construction failures\n", r.pairs, r.violations,
                r.not_majorizing);
    ok = ok && r.violations == 0 && r.not_majorizing == 0;
  }
  if (check == "all" || check == "bounds") {
    RngStream rng(cfg.seed, 0x7e02);
    const ErrorBoundReport r = verify_error_bounds(rng, trials);
    std::printf("%-28s %10s\n", "error bound check", "violations");
    std::printf("%-28s %10zu\n", "item 1 (pathwise)", r.item1_violations);
    std::printf("%-28s %10zu\n", "item 2 (lambda mean)", r.item2_violations);
    std::printf("%-28s %10zu\n", "item 3 (lambda mean)", r.item3_violations);
    std::printf("%-28s %10zu\n", "ordering b3 <= b2 <= b1", r.ordering_violations);
    std::printf("trials: %zu\n", r.trials);
    ok = ok && r.passed();
  }
  std::printf("%s\n", ok ? "all checks passed" : "CHECK FAILED");
  return ok ? 0 : kExitTheory;
}

int cmd_analyze_graphs(const CommonFlags& f, const std::string& checkpoint, const std::string& data,
                       const std::string& split, std::optional<std::size_t> samples) {
  const RunConfig cfg = resolve(f);
  const fs::path out(f.out);
  ensure_dir(out);
  Loaded l = load_model(checkpoint);
  const auto scenes = load_split(data, split, l.model->config().categories, l.normalizer);
  check_lengths(scenes, l.model->config());
  const std::size_t k = samples.value_or(cfg.eval.samples);

  EvalOptions eo;
  eo.samples = k;
  eo.seed = cfg.seed;
  eo.threads = cfg.threads;
  eo.normalizer = l.normalizer;
  const auto preds = predict_samples(*l.model, scenes, eo);
  write_graph_stats_csv(out / "graph_stats.csv", scenes, preds);

  std::vector<Scene> audited = scenes;
  if (cfg.eval.quality_scenes > 0 && audited.size() > cfg.eval.quality_scenes) audited.resize(cfg.eval.quality_scenes);
  GraphQualityOptions qo;
  qo.samples = std::max<std::size_t>(k, 2);
  qo.significance = cfg.eval.significance;
  qo.seed = cfg.seed;
  qo.threads = cfg.threads;
  const GraphQualityReport q = graph_quality(*l.model, audited, qo);
  {
    std::ofstream rates(out / "graph_quality.csv", std::ios::binary);
    rates << "inferred,redundant,missing,redundant_rate,missing_rate,scenes_evaluated,scenes_skipped\n";
    rates << q.inferred << ',' << q.redundant << ',' << q.missing << ',' << q.redundant_rate << ',' << q.missing_rate
          << ',' << q.scenes_evaluated << ',' << q.scenes_skipped << '\n';
  }

  // Graph selection on the encoder probabilities of the first window.
  {
    std::ofstream sel(out / "graph_selection.csv", std::ios::binary);
    sel << "scene_id,window,uncertain,exhaustive,edges,entropy\n";
    const SelectionHeuristic h = parse_heuristic(cfg.eval.heuristic);
    NoGradGuard no_grad;
    std::size_t greedy = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      const Batch batch = Batch::from_scene(scenes[s], l.model->config().categories);
      RngStream rng = RngStream(cfg.seed, 0x5e1).derive(s);
      const auto graphs = l.model->encode_truth(batch, Mode::kTest, rng);
      const std::size_t n = scenes[s].num_agents();
      std::vector<double> previous(n * n, 0.0);
      for (std::size_t w = 0; w < graphs.size(); ++w) {
        const auto probs = batch.layout.to_matrix(graphs[w].probs.values(), 0);
        const auto r = select_graph(probs, n, h, previous, cfg.eval.low, cfg.eval.high);
        if (!r.exhaustive) ++greedy;
        double edges = 0.0;
        for (double z : r.z) edges += z;
        sel << scenes[s].scene_id << ',' << w << ',' << r.uncertain << ',' << (r.exhaustive ? 1 : 0) << ',' << edges
            << ',' << graph_entropy(r.z, n) << '\n';
        previous = r.z;
      }
    }
    if (greedy > 0) {
      std::cerr << "warning: " << greedy << " windows exceed " << kMaxExhaustiveEdges
                << " uncertain edges; greedy selection used there\n";
    }
  }

  const std::size_t plots = std::min(cfg.eval.plots, scenes.size());
  for (std::size_t s = 0; s < plots; ++s) {
    std::vector<const ScenePrediction*> ps;
    for (std::size_t j = 0; j < k; ++j) ps.push_back(&preds[s * k + j]);
    std::ofstream svg(out / ("trajectories_" + scenes[s].scene_id + ".svg"), std::ios::binary);
    svg << trajectory_svg(scenes[s], ps, l.model->config().history);
  }
  std::cout << "inferred edges " << q.inferred << "  redundant rate " << q.redundant_rate << "  missing rate "
            << q.missing_rate << "\n";
  return 0;
}

int cmd_sweep_gamma(const CommonFlags& f, const std::string& data, const std::optional<std::string>& strategy) {
  RunConfig cfg = resolve(f, strategy);
  const fs::path out(f.out);
  ensure_dir(out);
  std::vector<MetricsRow> rows;
  for (double g : cfg.eval.gammas) {
    RunConfig run = cfg;
    run.train.gamma = g;
    char tag[64];
    std::snprintf(tag, sizeof tag, "gamma_%g", g);
    const fs::path dir = out / tag;
    std::cout << "training with gamma = " << g << "\n" << std::flush;
    const TrainResult tr = run_training(run, data, dir, std::nullopt, false);
    Model model(run.model);
    model.load_records(tr.best_checkpoint);
    const Normalizer norm = load_normalizer(data);
    const auto test = load_split(data, "test", run.model.categories, norm);
    EvalOptions eo;
    eo.samples = cfg.eval.samples;
    eo.seed = cfg.seed;
    eo.threads = cfg.threads;
    eo.normalizer = norm;
    rows.push_back({cfg.data.name, to_string(run.train.strategy), g, sampled_metrics(model, test, eo)});
    std::cout << "  meanADE " << rows.back().metrics.mean_ade << "  density " << rows.back().metrics.avg_density
              << "\n";
  }
  write_metrics_csv(out / "sweep.csv", rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HIMRAE heterogeneous multi-agent trajectory prediction"};
  app.require_subcommand(1);

  CommonFlags gen_f, train_f, eval_f, theory_f, graphs_f, sweep_f;
  std::string train_data = "data", eval_data = "data", graphs_data = "data", sweep_data = "data";
  std::string eval_ckpt, graphs_ckpt, eval_split = "test", graphs_split = "test";
  std::optional<std::string> train_strategy, sweep_strategy, resume;
  std::optional<double> train_gamma;
  std::optional<std::size_t> eval_samples, graphs_samples;
  std::string theory_check = "all";
  std::size_t theory_max_n = 6, theory_trials = 1000;

  auto* gen = app.add_subcommand("gen-data", "Generate synthetic train/val/test CSVs and the normalisation sidecar");
  add_common(gen, gen_f, "data");

  auto* tr = app.add_subcommand("train", "Train a model; writes checkpoint.hmra and epochs.csv");
  add_common(tr, train_f, "run");
  tr->add_option("--data", train_data, "Dataset directory")->capture_default_str();
  tr->add_option("--strategy", train_strategy, "plain, mixup, TF, TF_plus, GE or GE_mixup");
  tr->add_option("--gamma", train_gamma, "Graph penalty weight");
  tr->add_option("--resume", resume, "Continue from a checkpoint");

  auto* ev = app.add_subcommand("evaluate", "Sampled ADE/FDE metrics and prediction export");
  add_common(ev, eval_f, "eval");
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  ev->add_option("--data", eval_data, "Dataset directory")->capture_default_str();
  ev->add_option("--split", eval_split, "train, val or test")->capture_default_str();
  ev->add_option("--samples", eval_samples, "Samples per scene (K)");

  auto* th = app.add_subcommand("verify-theory", "Entropy minimiser, majorization and error-bound checks");
  add_common(th, theory_f, ".");
  th->add_option("--check", theory_check, "entropy, bounds, majorization or all")->capture_default_str();
  th->add_option("--max-n", theory_max_n, "Largest N for the entropy enumeration")->capture_default_str();
  th->add_option("--trials", theory_trials, "Random trials for bounds and majorization")->capture_default_str();

  auto* ag = app.add_subcommand("analyze-graphs", "Graph statistics, edge-quality rates, selection and plots");
  add_common(ag, graphs_f, "graphs");
  ag->add_option("--checkpoint", graphs_ckpt, "Checkpoint file")->required();
  ag->add_option("--data", graphs_data, "Dataset directory")->capture_default_str();
  ag->add_option("--split", graphs_split, "train, val or test")->capture_default_str();
  ag->add_option("--samples", graphs_samples, "Samples per scene (K)");

  auto* sw = app.add_subcommand("sweep-gamma", "Train and evaluate for each gamma in eval.gammas");
  add_common(sw, sweep_f, "sweep");
  sw->add_option("--data", sweep_data, "Dataset directory")->capture_default_str();
  sw->add_option("--strategy", sweep_strategy, "Training strategy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_data(gen_f);
    if (*tr) {
      run_training(resolve(train_f, train_strategy, train_gamma), train_data, train_f.out, resume, true);
      return 0;
    }
    if (*ev) return cmd_evaluate(eval_f, eval_ckpt, eval_data, eval_split, eval_samples);
    if (*th) return cmd_verify_theory(theory_f, theory_check, theory_max_n, theory_trials);
    if (*ag) return cmd_analyze_graphs(graphs_f, graphs_ckpt, graphs_data, graphs_split, graphs_samples);
    if (*sw) return cmd_sweep_gamma(sweep_f, sweep_data, sweep_strategy);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
