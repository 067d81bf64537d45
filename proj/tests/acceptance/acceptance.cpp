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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "himrae/batch.hpp"
#include "himrae/checkpoint.hpp"
#include "himrae/data.hpp"
#include "himrae/evaluation.hpp"
#include "himrae/graph_complexity.hpp"
#include "himrae/model.hpp"
#include "himrae/parallel.hpp"
#include "himrae/theory.hpp"
#include "himrae/training.hpp"

using namespace himrae;
using himrae::testing::check_gradients;
using himrae::testing::GradCheck;
using himrae::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ModelConfig tiny_model(std::uint64_t seed) {
  ModelConfig c;
  c.hidden = 6;
  c.edge_dim = 5;
  c.init_seed = seed;
  return c;
}

std::vector<Scene> synthetic(std::size_t n, std::uint64_t seed) {
  SyntheticConfig c;
  c.n_scenes = n;
  c.seed = seed;
  return generate_synthetic(c).scenes;
}

std::vector<const Scene*> ptrs(const std::vector<Scene>& s) {
  std::vector<const Scene*> out;
  for (const auto& x : s) out.push_back(&x);
  return out;
}

std::vector<Tensor> param_leaves(const Model& m, const std::string& prefix = "") {
  std::vector<Tensor> out;
  for (const auto& k : m.params().param_keys())
    if (k.rfind(prefix, 0) == 0) out.push_back(m.params().get(k));
  return out;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  constexpr std::size_t kProbes = 30;
  constexpr double kTol = 1e-4;
  constexpr double kStep = 1e-5;
  // Gradients below kFloor * max(1, |loss|) are compared in absolute terms;
  // central differences cannot resolve them more finely.
  constexpr double kFloor = 1e-6;
  const auto sc = synthetic(3, 101);
  const Batch batch = Batch::from_scenes(ptrs(sc), 3);
  Model model(tiny_model(101));
  RngStream probe(101, 1);
  std::vector<std::pair<std::string, GradCheck>> results;
  auto check = [&](const std::string& name, const std::function<Tensor()>& f, const std::vector<Tensor>& leaves) {
    const double scale = std::max(1.0, std::abs(f().item()));
    results.emplace_back(name, check_gradients(f, leaves, kProbes, probe, kStep, kFloor * scale));
  };

  {  // encoder message passing
    Tensor v = random_tensor({batch.num_nodes(), 6}, probe);
    const Tensor wv = random_tensor({batch.num_nodes(), 6}, probe, 1.0, false);
    const Tensor we = random_tensor({batch.layout.num_edges(), 5}, probe, 1.0, false);
    auto leaves = param_leaves(model, "enc.f_e");
    for (auto& t : param_leaves(model, "enc.f_v")) leaves.push_back(t);
    leaves.push_back(v);
    auto f = [&] {
      const auto [vt, et] = model.encoder().gnn_pass(v, batch.layout, true);
      return ops::add(ops::sum(ops::mul(vt, wv)), ops::sum(ops::mul(et, we)));
    };
    check("encoder GNN", f, leaves);
  }
  {  // binary concrete relaxation
    Tensor logits = random_tensor({40, 1}, probe, 2.0);
    const Tensor w = random_tensor({40, 1}, probe, 1.0, false);
    auto f = [&] {
      RngStream r(102, 0);
      return ops::sum(ops::mul(Encoder::sample_relations(logits, 0.5, Mode::kTrain, r, true), w));
    };
    check("Gumbel-sigmoid", f, {logits});
  }
  {  // heterogeneous attention
    const std::size_t e = batch.layout.num_edges();
    std::vector<double> zv(e);
    for (double& z : zv) z = probe.bernoulli(0.6) ? probe.uniform(0.6, 1.0) : probe.uniform(0.0, 0.4);
    GraphSample g;
    g.z = Tensor::from({e, 1}, zv, true);
    g.edge_features = random_tensor({e, 5}, probe);
    Tensor h = random_tensor({batch.num_nodes(), 6}, probe);
    const Tensor w = random_tensor({batch.num_nodes(), 6}, probe, 1.0, false);
    auto leaves = param_leaves(model, "dec.g_");
    for (const char* p : {"dec.f_q", "dec.f_k", "dec.f_v"})
      for (auto& t : param_leaves(model, p)) leaves.push_back(t);
    leaves.push_back(h);
    leaves.push_back(g.z);
    leaves.push_back(g.edge_features);
    auto f = [&] { return ops::sum(ops::mul(model.decoder().ham_aggregate(h, batch, g), w)); };
    check("HAM", f, leaves);
  }
  {  // category GRUs and output head
    Tensor m = random_tensor({batch.num_nodes(), 6}, probe);
    Tensor x = random_tensor({batch.num_nodes(), 2}, probe);
    DecoderState init{{random_tensor({batch.num_nodes(), 6}, probe), random_tensor({batch.num_nodes(), 6}, probe)}};
    auto leaves = param_leaves(model, "dec.gru");
    leaves.push_back(m);
    leaves.push_back(x);
    leaves.push_back(init.hidden[0]);
    leaves.push_back(init.hidden[1]);
    auto f = [&] {
      DecoderState s = init;
      const Tensor mu = model.decoder().step(s, m, x, batch, Tensor());
      return ops::add(ops::sum_squares(mu), ops::sum(s.hidden[0]));
    };
    check("category GRUs", f, leaves);
  }
  {  // entropy penalty
    std::vector<double> zv(batch.layout.num_edges());
    for (double& z : zv) z = probe.uniform(0.05, 0.95);
    Tensor z = Tensor::from({zv.size(), 1}, zv, true);
    const Tensor w = random_tensor({batch.num_scenes(), 1}, probe, 1.0, false);
    auto f = [&] { return ops::sum(ops::mul(entropy_per_scene(z, batch.layout), w)); };
    check("entropy penalty", f, {z});
  }
  {  // full regularised loss along the free-running rollout; the mixup path
     // detaches its target, which finite differences cannot see
    auto f = [&] {
      RngStream r(103, 0);
      const auto noise = model.draw_output_noise(batch, r);
      const auto graphs = model.encode_truth(batch, Mode::kTrain, r);
      RolloutOptions ro;
      ro.policy = InputPolicy::kFreeRun;
      ro.output_noise = &noise;
      ro.graphs = &graphs;
      const auto out = model.rollout(batch, ro, r);
      const Tensor recon = reconstruction_loss(batch.truth, out.predictions, batch.layout, 5);
      return regularized_loss(recon, window_penalties(graphs, batch.layout, Penalty::kEntropy), 0.1);
    };
    check("full loss", f, param_leaves(model));
  }
  model.params().zero_grad();

  const double elapsed = seconds_since(start);
  bool ok = elapsed < 120.0;
  std::string detail;
  for (const auto& [name, r] : results) {
    ok = ok && r.probes >= 20 && r.max_rel_error < kTol;
    detail += fmt("%s %.1e/%zu; ", name.c_str(), r.max_rel_error, r.probes);
  }
  return {ok, detail + fmt("%.1fs", elapsed)};
}

Outcome entropy_minimum() {
  const auto start = std::chrono::steady_clock::now();
  const auto rows = entropy_minimizer_table(6);
  double worst = 0.0;
  bool monotone = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    worst = std::max(worst, std::abs(rows[k].closed_form - rows[k].brute_force));
    if (k > 0 && rows[k].n == rows[k - 1].n && rows[k].closed_form < rows[k - 1].closed_form) monotone = false;
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-12 && monotone && elapsed < 60.0,
          fmt("%zu (N,|E|) cases, max |closed - brute| = %.1e, monotone %s, %.2fs", rows.size(), worst,
              monotone ? "yes" : "no", elapsed)};
}

Outcome majorization() {
  RngStream rng(301, 0);
  const HlpReport r = verify_hlp_pairs(1000, rng);
  return {r.pairs == 1000 && r.violations == 0 && r.not_majorizing == 0,
          fmt("%zu pairs, %zu violations, %zu construction failures", r.pairs, r.violations, r.not_majorizing)};
}

Outcome error_bounds() {
  RngStream rng(401, 0);
  const ErrorBoundReport r = verify_error_bounds(rng, 1000);
  return {r.trials == 1000 && r.passed(),
          fmt("%zu trials; violations item1 %zu, item2 %zu, item3 %zu, ordering %zu", r.trials, r.item1_violations,
              r.item2_violations, r.item3_violations, r.ordering_violations)};
}

Outcome entropy_extremes() {
  std::size_t uniform_cases = 0, hub_cases = 0, bad = 0;
  double penalty_dev = 0.0;  // differentiable batched form, compared within rounding
  for (std::size_t n = 2; n <= 12; ++n) {
    // Circulant graphs i -> i + s for s in [1, k] give in-degree k everywhere.
    for (std::size_t k = 1; k < n; ++k) {
      std::vector<double> z(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 1; s <= k; ++s) z[i * n + (i + s) % n] = 1.0;
      const auto layout = GraphLayout::build(std::vector<std::size_t>{n});
      std::vector<double> ev(layout.num_edges());
      layout.from_matrix(z, 0, ev);
      const double batched = entropy_per_scene(Tensor::from({ev.size(), 1}, ev), layout).item();
      bad += graph_entropy(z, n) != 1.0;
      penalty_dev = std::max(penalty_dev, std::abs(batched - 1.0));
      ++uniform_cases;
    }
    for (std::size_t hub = 0; hub < n; ++hub)
      for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> z(n * n, 0.0);
        std::size_t placed = 0;
        for (std::size_t i = 0; i < n && placed < e; ++i)
          if (i != hub) {
            z[i * n + hub] = 1.0;
            ++placed;
          }
        const auto layout = GraphLayout::build(std::vector<std::size_t>{n});
        std::vector<double> ev(layout.num_edges());
        layout.from_matrix(z, 0, ev);
        const double batched = entropy_per_scene(Tensor::from({ev.size(), 1}, ev), layout).item();
        bad += graph_entropy(z, n) != 0.0;
        penalty_dev = std::max(penalty_dev, std::abs(batched));
        ++hub_cases;
      }
  }
  return {bad == 0 && penalty_dev <= 1e-15,
          fmt("%zu uniform-degree graphs (H = 1), %zu single-hub graphs (H = 0), %zu inexact; batched penalty "
              "max deviation %.1e",
              uniform_cases, hub_cases, bad, penalty_dev)};
}

// ---------------------------------------------------------------------------
// Synthetic end-to-end experiment shared by the mixup and strategy criteria.

constexpr std::size_t kSeeds = 5;
constexpr std::size_t kEpochs = 50;
constexpr std::size_t kWidth = 16;
constexpr std::size_t kTail = 10;  // epochs in the end-of-training running averages
const std::vector<Strategy> kStrategies{Strategy::kPlain, Strategy::kGEMixup, Strategy::kMixup, Strategy::kTF};

struct RunSummary {
  double test_mean_ade = 0.0;
  double test_entropy = 0.0;
  double tail_gap = 0.0;  // val_loss - train_loss
  double tail_l1 = 0.0, tail_l2 = 0.0;
};

struct Experiment {
  std::map<std::pair<std::size_t, Strategy>, RunSummary> runs;
  double seconds = 0.0;
};

Experiment run_experiment() {
  const auto start = std::chrono::steady_clock::now();
  Experiment ex;
  for (std::size_t seed = 1; seed <= kSeeds; ++seed) {
    SyntheticConfig data;
    data.n_scenes = 200;
    data.seed = seed;
    const auto raw = generate_raw(data);
    const auto split = split_dataset(raw, 0.65, 0.10, seed);
    const Normalizer norm = Normalizer::fit(split.train).widened(0.25);
    auto prep = [&](const std::vector<Scene>& part) {
      std::vector<Scene> out;
      for (const auto& s : part) out.push_back(normalize(s, norm));
      return out;
    };
    const auto train_set = prep(split.train), val_set = prep(split.val), test_set = prep(split.test);

    for (Strategy strategy : kStrategies) {
      ModelConfig mc;
      mc.hidden = mc.edge_dim = kWidth;
      mc.init_seed = seed;
      TrainConfig tc;
      tc.epochs = kEpochs;
      tc.batch_size = 16;
      tc.strategy = strategy;
      tc.seed = seed;
      Model model(mc);
      TrainOptions opt;
      opt.normalizer = norm;
      opt.threads = default_threads();
      const TrainResult tr = train(model, tc, train_set, val_set, opt);
      model.load_records(tr.best_checkpoint);
      EvalOptions eo;
      eo.samples = 20;
      eo.seed = seed;
      eo.threads = default_threads();
      eo.normalizer = norm;
      const MetricsRecord m = sampled_metrics(model, test_set, eo);

      RunSummary r;
      r.test_mean_ade = m.mean_ade;
      r.test_entropy = m.avg_entropy;
      for (std::size_t k = tr.log.size() - kTail; k < tr.log.size(); ++k) {
        r.tail_gap += (tr.log[k].val_loss - tr.log[k].train_loss) / kTail;
        r.tail_l1 += tr.log[k].l1 / kTail;
        r.tail_l2 += tr.log[k].l2 / kTail;
      }
      ex.runs[{seed, strategy}] = r;
      std::fprintf(stderr, "  seed %zu %-8s meanADE %.4f entropy %.4f gap %.5f L1 %.5f L2 %.5f (%.0fs)\n", seed,
                   to_string(strategy).c_str(), r.test_mean_ade, r.test_entropy, r.tail_gap, r.tail_l1, r.tail_l2,
                   seconds_since(start));
    }
  }
  ex.seconds = seconds_since(start);
  return ex;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome mixup_mechanics(const Experiment& ex) {
  const auto sc = synthetic(4, 601);
  const Batch b = Batch::from_scenes(ptrs(sc), 3);
  bool ok = true;
  std::string detail;

  {  // lambda = 0: the boundary input is the truth, so L1 is the window teacher-forced loss
    Model m(tiny_model(601));
    RngStream rng(601, 1), ref = rng;
    const auto noise = m.draw_output_noise(b, ref);
    RngStream g = ref.derive(0x6a);
    const auto graphs = m.encode_truth(b, Mode::kTrain, g);
    RolloutOptions ro;
    ro.policy = InputPolicy::kTeacherForcingPlus;
    ro.output_noise = &noise;
    ro.graphs = &graphs;
    const double expected = reconstruction_loss(b.truth, m.rollout(b, ro, ref).predictions, b.layout, 5).item();
    Adam adam;
    TrainConfig tc;
    tc.strategy = Strategy::kMixup;
    const StepLosses l = mixup_step(m, adam, b, tc, MixState{}, rng, 0.0);
    const bool pass = l.l1 == expected;
    ok = ok && pass;
    detail += fmt("lambda=0 L1 == TF+ %s; ", pass ? "exact" : "MISMATCH");
  }
  {  // lambda = 1: mixed and free rollouts coincide
    Model m(tiny_model(602));
    RngStream rng(602, 1);
    Adam adam;
    TrainConfig tc;
    tc.strategy = Strategy::kGEMixup;
    const StepLosses l = mixup_step(m, adam, b, tc, MixState{}, rng, 1.0);
    ok = ok && l.l2 == 0.0;
    detail += fmt("lambda=1 L2 = %.1e; ", l.l2);
  }
  {  // stop-gradient isolation
    Model m(tiny_model(603));
    RngStream rng(603, 1);
    const auto graphs = m.encode_truth(b, Mode::kTrain, rng);
    const auto noise = m.draw_output_noise(b, rng);
    const std::vector<double> lambdas(b.num_scenes(), 0.5);
    const std::size_t boundary = m.boundary_steps().front();
    auto leak = [&](InputPolicy policy) {
      RolloutOptions ro;
      ro.policy = policy;
      ro.lambdas = &lambdas;
      ro.output_noise = &noise;
      ro.graphs = &graphs;
      const auto r = m.rollout(b, ro, rng);
      Tensor loss;
      for (std::size_t t = boundary + 1; t < b.steps; ++t) {
        const Tensor s = ops::sum_squares(r.predictions[t]);
        loss = loss.defined() ? ops::add(loss, s) : s;
      }
      backward(loss);
      double total = 0.0;
      for (double g : r.predictions[boundary].grad()) total += std::abs(g);
      return total;
    };
    const double mixed = leak(InputPolicy::kMixup), free = leak(InputPolicy::kFreeRun);
    ok = ok && mixed == 0.0 && free > 0.0;
    detail += fmt("grad through mixed boundary %.1e (free run %.1e); ", mixed, free);
  }
  {  // imitation loss below reconstruction loss at the end of every mixup run
    std::size_t runs = 0, below = 0;
    double worst_ratio = 0.0;
    for (const auto& [key, r] : ex.runs) {
      if (!uses_mixup(key.second)) continue;
      ++runs;
      below += r.tail_l2 < r.tail_l1;
      worst_ratio = std::max(worst_ratio, r.tail_l2 / r.tail_l1);
    }
    ok = ok && runs > 0 && below == runs;
    detail += fmt("%zu-epoch runs with L2 < L1 (last %zu epochs): %zu/%zu, max L2/L1 %.3f", kEpochs, kTail, below,
                  runs, worst_ratio);
  }
  return {ok, detail};
}

Outcome end_to_end(const Experiment& ex) {
  std::vector<double> improvement, entropy_drop, gap_tf, gap_mix;
  for (std::size_t seed = 1; seed <= kSeeds; ++seed) {
    const auto& plain = ex.runs.at({seed, Strategy::kPlain});
    const auto& ge_mix = ex.runs.at({seed, Strategy::kGEMixup});
    const auto& mix = ex.runs.at({seed, Strategy::kMixup});
    const auto& tf = ex.runs.at({seed, Strategy::kTF});
    improvement.push_back(1.0 - ge_mix.test_mean_ade / plain.test_mean_ade);
    entropy_drop.push_back(mix.test_entropy - ge_mix.test_entropy);
    gap_tf.push_back(tf.tail_gap);
    gap_mix.push_back(mix.tail_gap);
  }
  const double a = median(improvement), b = median(entropy_drop);
  const double c_tf = median(gap_tf), c_mix = median(gap_mix);
  const bool pa = a >= 0.05, pb = b > 0.0, pc = c_tf > c_mix, pt = ex.seconds < 1800.0;
  return {pa && pb && pc && pt,
          fmt("(a) GE_mixup vs plain mean ADE improvement %.1f%% %s; (b) entropy GE_mixup below mixup by %.4f %s; "
              "(c) val-train gap TF %.5f vs mixup %.5f %s; %zu seeds x %zu strategies in %.0fs %s",
              100.0 * a, pa ? "ok" : "FAIL", b, pb ? "ok" : "FAIL", c_tf, c_mix, pc ? "ok" : "FAIL", kSeeds,
              kStrategies.size(), ex.seconds, pt ? "ok" : "FAIL")};
}

// ---------------------------------------------------------------------------

Outcome permutation_equivariance() {
  RngStream rng(801, 0);
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    SyntheticConfig c;
    c.n_scenes = 1;
    c.min_agents = 2;
    c.max_agents = 8;
    c.seed = 8000 + trial;
    const Scene s = generate_synthetic(c).scenes.front();
    const std::size_t n = s.num_agents();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    Scene p = s;
    p.truth_graph.reset();
    for (std::size_t i = 0; i < n; ++i) {
      p.categories[i] = s.categories[perm[i]];
      for (std::size_t t = 0; t < s.steps; ++t) {
        p.x(i, t) = s.x(perm[i], t);
        p.y(i, t) = s.y(perm[i], t);
      }
    }
    ModelConfig mc = tiny_model(trial);
    mc.edge_noise = mc.output_noise = mc.relation_noise = false;
    Model model(mc);
    const Mode mode = trial % 2 ? Mode::kTest : Mode::kTrain;
    RolloutOptions ro;
    ro.mode = mode;
    ro.encoder_from_truth = mode == Mode::kTrain;
    RngStream r1(trial, 1), r2(trial, 1);
    const auto a = model.rollout(Batch::from_scene(s, 3), ro, r1);
    const auto b = model.rollout(Batch::from_scene(p, 3), ro, r2);
    for (std::size_t t = 1; t < s.steps; ++t)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 2; ++k)
          worst = std::max(worst, std::abs(b.predictions[t].at(i, k) - a.predictions[t].at(perm[i], k)));
    ++cases;
  }
  return {cases == 50 && worst < 1e-9, fmt("%zu relabelled scenes, max |deviation| = %.2e", cases, worst)};
}

Outcome metrics_oracle() {
  RngStream rng(901, 0);
  double worst_ade = 0.0, worst_loss = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t agents = 1 + rng.uniform_int(8), steps = 1 + rng.uniform_int(15);
    std::vector<double> t(agents * steps * 2), p(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = 3.0 * rng.normal();
      p[k] = 3.0 * rng.normal();
    }
    const auto r = ade_fde(t, p, agents, steps);
    for (std::size_t a = 0; a < agents; ++a) {
      double sum = 0.0, last = 0.0;
      for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t k = (a * steps + s) * 2;
        last = std::hypot(p[k] - t[k], p[k + 1] - t[k + 1]);
        sum += last;
      }
      worst_ade = std::max({worst_ade, std::abs(r.ade[a] - sum / static_cast<double>(steps)), std::abs(r.fde[a] - last)});
    }
  }
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> sizes(1 + rng.uniform_int(5));
    for (auto& n : sizes) n = 2 + rng.uniform_int(7);
    const auto layout = GraphLayout::build(sizes);
    const std::size_t steps = 15, history = 5;
    std::vector<Tensor> x, y;
    for (std::size_t s = 0; s < steps; ++s) {
      x.push_back(random_tensor({layout.num_nodes, 2}, rng, 1.0, false));
      y.push_back(random_tensor({layout.num_nodes, 2}, rng, 1.0, false));
    }
    double oracle = 0.0;
    for (std::size_t sc = 0; sc < sizes.size(); ++sc) {
      double acc = 0.0;
      for (std::size_t i = 0; i < sizes[sc]; ++i)
        for (std::size_t s = history; s < steps; ++s)
          for (std::size_t k = 0; k < 2; ++k) {
            const std::size_t node = layout.scene_offset[sc] + i;
            const double d = x[s].at(node, k) - y[s].at(node, k);
            acc += d * d;
          }
      oracle += acc / static_cast<double>(sizes[sc] * (steps - history));
    }
    oracle /= static_cast<double>(sizes.size());
    worst_loss = std::max(worst_loss, std::abs(reconstruction_loss(x, y, layout, history).item() - oracle));
  }
  std::size_t checks = 0, violations = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticConfig c;
    c.n_scenes = 12;
    c.seed = 900 + seed;
    const auto d = generate_synthetic(c);
    Model m(tiny_model(seed));
    EvalOptions o;
    o.samples = 20;
    o.seed = seed;
    o.normalizer = d.normalizer;
    const auto preds = predict_samples(m, d.scenes, o);
    for (std::size_t s = 0; s < d.scenes.size(); ++s) {
      const MetricsRecord r = summarize(m, {d.scenes[s]}, std::vector<ScenePrediction>(preds.begin() + s * 20,
                                                                                      preds.begin() + (s + 1) * 20),
                                        o);
      checks += 2;
      violations += (r.min_ade > r.mean_ade) + (r.min_fde > r.mean_fde);
    }
  }
  return {worst_ade <= 1e-12 && worst_loss <= 1e-12 && violations == 0,
          fmt("ADE/FDE max error %.1e, loss max error %.1e, min <= mean in %zu/%zu K=20 checks", worst_ade,
              worst_loss, checks - violations, checks)};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "himrae_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SyntheticConfig data;
  data.n_scenes = 40;
  data.seed = 1001;
  const auto raw = generate_raw(data);
  const auto split = split_dataset(raw, 0.65, 0.10, 1001);
  const Normalizer norm = Normalizer::fit(split.train).widened(0.25);
  auto prep = [&](const std::vector<Scene>& part) {
    std::vector<Scene> out;
    for (const auto& s : part) out.push_back(normalize(s, norm));
    return out;
  };
  const auto tr = prep(split.train), va = prep(split.val), te = prep(split.test);

  auto run = [&](const std::string& tag) {
    ModelConfig mc;
    mc.hidden = mc.edge_dim = 8;
    mc.init_seed = 1001;
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.seed = 1001;
    Model model(mc);
    TrainOptions opt;
    opt.checkpoint_path = dir / (tag + ".hmra");
    opt.log_path = dir / (tag + "_epochs.csv");
    opt.normalizer = norm;
    const TrainResult r = train(model, tc, tr, va, opt);
    model.load_records(r.best_checkpoint);
    EvalOptions eo;
    eo.samples = 5;
    eo.seed = 1001;
    eo.normalizer = norm;
    const auto preds = predict_samples(model, te, eo);
    const std::vector<MetricsRow> rows{{"synthetic", "GE_mixup", tc.gamma, summarize(model, te, preds, eo)}};
    write_metrics_csv(dir / (tag + "_metrics.csv"), rows);
    write_category_csv(dir / (tag + "_category.csv"), rows);
    write_predictions_csv(dir / (tag + "_predictions.csv"), te, preds, 5, norm);
  };
  run("a");
  run("b");
  std::size_t same = 0, total = 0;
  for (const char* f : {".hmra", ".hmra.last", "_epochs.csv", "_metrics.csv", "_category.csv", "_predictions.csv"}) {
    ++total;
    same += read_bytes(dir / (std::string("a") + f)) == read_bytes(dir / (std::string("b") + f));
  }

  const auto rec = load_checkpoint(dir / "a.hmra");
  Model restored(Model::config_from_records(rec));
  restored.load_records(rec);
  std::size_t params = 0, exact = 0;
  for (const auto& [key, t] : rec) {
    if (is_meta_key(key)) continue;
    ++params;
    const auto v = restored.params().get(key).values();
    exact += v.size() == t.size() && std::memcmp(v.data(), t.values().data(), v.size() * sizeof(double)) == 0;
  }
  auto again = make_checkpoint(restored, checkpoint_epoch(rec), checkpoint_normalizer(rec));
  for (const auto& [key, t] : rec)
    if (is_meta_key(key)) again[key] = t;
  const bool resave = encode_checkpoint(again) == encode_checkpoint(rec);
  return {same == total && exact == params && resave,
          fmt("%zu/%zu artefacts byte-identical across runs; %zu/%zu tensors restored bit-exactly; re-encoded "
              "checkpoint identical %s",
              same, total, exact, params, resave ? "yes" : "no")};
}

Outcome selection_heuristic() {
  RngStream rng(1101, 0);
  std::size_t matrices = 0, completions = 0, violations = 0;
  while (matrices < 100) {
    const std::size_t n = 3 + rng.uniform_int(3);
    std::vector<double> p(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) p[i * n + j] = rng.uniform();
    std::vector<std::size_t> unc;
    std::vector<double> base(n * n, 0.0);
    for (std::size_t q = 0; q < n * n; ++q) {
      if (q / n == q % n) continue;
      if (p[q] > 0.8) base[q] = 1.0;
      else if (p[q] >= 0.2) unc.push_back(q);
    }
    if (unc.size() > kMaxExhaustiveEdges) continue;
    const auto r = select_graph(p, n, SelectionHeuristic::kEntropy, {}, 0.2, 0.8);
    if (!r.exhaustive) {
      ++violations;
      continue;
    }
    ++matrices;
    const double chosen = graph_entropy(r.z, n);
    for (std::uint32_t mask = 0; mask < (1u << unc.size()); ++mask) {
      auto z = base;
      for (std::size_t b = 0; b < unc.size(); ++b) z[unc[b]] = (mask >> b) & 1u;
      ++completions;
      violations += chosen > graph_entropy(z, n);
    }
  }
  return {violations == 0, fmt("%zu probability matrices, %zu completions enumerated, %zu better completions found",
                               matrices, completions, violations)};
}

}  // namespace

// Optional arguments select criteria by number; none runs all of them.
int main(int argc, char** argv) {
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  Experiment experiment;
  bool have_experiment = false;
  auto experiment_once = [&]() -> const Experiment& {
    if (!have_experiment) {
      std::fprintf(stderr, "running synthetic experiment (%zu seeds, %zu strategies, %zu epochs, width %zu)\n", kSeeds,
                   kStrategies.size(), kEpochs, kWidth);
      experiment = run_experiment();
      have_experiment = true;
    }
    return experiment;
  };

  criteria.emplace_back("gradient suite", gradient_suite);
  criteria.emplace_back("minimum entropy closed form", entropy_minimum);
  criteria.emplace_back("Hardy-Littlewood-Polya", majorization);
  criteria.emplace_back("mixup error bounds", error_bounds);
  criteria.emplace_back("entropy extremes", entropy_extremes);
  criteria.emplace_back("mixup mechanics", [&] { return mixup_mechanics(experiment_once()); });
  criteria.emplace_back("synthetic end-to-end", [&] { return end_to_end(experiment_once()); });
  criteria.emplace_back("permutation equivariance", permutation_equivariance);
  criteria.emplace_back("metrics oracle", metrics_oracle);
  criteria.emplace_back("determinism and persistence", determinism);
  criteria.emplace_back("graph selection heuristic", selection_heuristic);

  int failures = 0;
  std::vector<bool> selected(criteria.size(), argc < 2);
  for (int a = 1; a < argc; ++a) {
    const std::size_t k = std::strtoul(argv[a], nullptr, 10);
    if (k < 1 || k > criteria.size()) {
      std::fprintf(stderr, "no criterion %s\n", argv[a]);
      return 2;
    }
    selected[k - 1] = true;
  }

  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected[k]) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %zu %s: %s (%s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
