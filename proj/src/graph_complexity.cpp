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

#include "himrae/graph_complexity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "himrae/errors.hpp"

namespace himrae {

namespace {

constexpr double kLogFloor = 1e-12;

void check_square(std::span<const double> z, std::size_t n) {
  if (n < 2) throw ContractError("graph statistics need N >= 2");
  if (z.size() != n * n) throw ShapeError("graph statistics: expected N x N adjacency");
}

}  // namespace

DegreeDistribution degree_distribution(std::span<const double> z, std::size_t n) {
  check_square(z, n);
  DegreeDistribution dist;
  dist.degrees.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) dist.degrees[j] += z[i * n + j];
  dist.edges = std::accumulate(dist.degrees.begin(), dist.degrees.end(), 0.0);
  dist.p.assign(n, 0.0);
  if (dist.edges > 0.0)
    for (std::size_t j = 0; j < n; ++j) dist.p[j] = dist.degrees[j] / dist.edges;
  return dist;
}

double graph_entropy_of_degrees(std::span<const double> degrees) {
  const std::size_t n = degrees.size();
  if (n < 2) throw ContractError("graph entropy needs N >= 2");
  const double edges = std::accumulate(degrees.begin(), degrees.end(), 0.0);
  if (edges <= 0.0) return 0.0;
  // Equal degrees are summed as count * d before taking the log term, so a
  // uniform vector reproduces edges * ln N bit for bit.
  std::vector<double> sorted(degrees.begin(), degrees.end());
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end < n && sorted[end] == sorted[k]) ++end;
    const double d = sorted[k];
    if (d > 0.0) acc += static_cast<double>(end - k) * d * std::log(edges / d);
    k = end;
  }
  return acc / (edges * std::log(static_cast<double>(n)));
}

double graph_entropy(std::span<const double> z, std::size_t n) {
  return graph_entropy_of_degrees(degree_distribution(z, n).degrees);
}

double min_graph_entropy(std::size_t n, std::size_t edges) {
  if (n < 2) throw ContractError("min_graph_entropy: N >= 2 required");
  if (edges > n * (n - 1)) throw ContractError("min_graph_entropy: |E| exceeds N(N-1)");
  if (edges <= n - 1) return 0.0;
  const std::size_t k = edges / (n - 1);
  const std::size_t e = edges % (n - 1);
  const double E = static_cast<double>(edges);
  double h = static_cast<double>(k * (n - 1)) / E * std::log(E / static_cast<double>(n - 1));
  if (e > 0) h -= static_cast<double>(e) / E * std::log(static_cast<double>(e) / E);
  return h / std::log(static_cast<double>(n));
}

bool majorizes(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("majorizes: vectors differ in length");
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end(), std::greater<>());
  std::sort(ys.begin(), ys.end(), std::greater<>());
  const double sx = std::accumulate(xs.begin(), xs.end(), 0.0);
  const double sy = std::accumulate(ys.begin(), ys.end(), 0.0);
  if (std::abs(sx - sy) > 1e-9) throw ContractError("majorizes: vectors have different sums");
  double px = 0.0, py = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    px += xs[k];
    py += ys[k];
    if (px < py - 1e-12) return false;
  }
  return true;
}

double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

bool verify_hlp(std::span<const double> x, std::span<const double> y) {
  if (!majorizes(x, y)) throw ContractError("verify_hlp: x does not majorize y");
  for (double v : x)
    if (v < 0.0) throw ContractError("verify_hlp: x is not on the simplex");
  for (double v : y)
    if (v < 0.0) throw ContractError("verify_hlp: y is not on the simplex");
  return shannon_entropy(x) <= shannon_entropy(y) + 1e-12;
}

double r_density(std::span<const double> z, std::size_t n) {
  check_square(z, n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += z[i * n + j];
  return s / static_cast<double>(n * (n - 1));
}

double r_degree(std::span<const double> z, std::size_t n) {
  const auto dist = degree_distribution(z, n);
  return *std::max_element(dist.degrees.begin(), dist.degrees.end()) / static_cast<double>(n);
}

Penalty parse_penalty(const std::string& name) {
  if (name == "entropy") return Penalty::kEntropy;
  if (name == "density") return Penalty::kDensity;
  if (name == "degree") return Penalty::kDegree;
  throw ConfigError("unknown penalty '" + name + "' (expected entropy, density or degree)");
}

std::string to_string(Penalty penalty) {
  switch (penalty) {
    case Penalty::kEntropy:
      return "entropy";
    case Penalty::kDensity:
      return "density";
    case Penalty::kDegree:
      return "degree";
  }
  return "entropy";
}

namespace {

void check_edges(const Tensor& z, const GraphLayout& layout) {
  if (z.rank() != 2 || z.cols() != 1 || z.rows() != layout.num_edges()) {
    throw ShapeError("expected edge weights [" + std::to_string(layout.num_edges()) + " x 1], got " +
                     shape_str(z.shape()));
  }
}

Tensor constant_column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::from({n, 1}, std::move(v));
}

}  // namespace

Tensor entropy_per_scene(const Tensor& z, const GraphLayout& layout) {
  check_edges(z, layout);
  const Tensor degrees = ops::scatter_add_rows(z, layout.dst, layout.num_nodes);
  const Tensor edges = ops::scatter_add_rows(degrees, layout.node_scene, layout.num_scenes);
  // Scenes without edges get denominator 1; every degree is then 0 and H = 0.
  std::vector<double> pad(layout.num_scenes, 0.0), inv_log_n(layout.num_scenes);
  for (std::size_t s = 0; s < layout.num_scenes; ++s) {
    if (edges[s] <= 0.0) pad[s] = 1.0;
    inv_log_n[s] = 1.0 / std::log(static_cast<double>(layout.scene_size[s]));
  }
  const Tensor safe_edges = ops::add(edges, constant_column(pad));
  const Tensor log_edges = ops::gather_rows(ops::log_clamped(safe_edges, kLogFloor), layout.node_scene);
  const Tensor terms = ops::mul(degrees, ops::sub(log_edges, ops::log_clamped(degrees, kLogFloor)));
  const Tensor total = ops::scatter_add_rows(terms, layout.node_scene, layout.num_scenes);
  return ops::mul_col(ops::div(total, safe_edges), constant_column(std::move(inv_log_n)));
}

Tensor density_per_scene(const Tensor& z, const GraphLayout& layout) {
  check_edges(z, layout);
  std::vector<double> inv(layout.num_scenes);
  for (std::size_t s = 0; s < layout.num_scenes; ++s) {
    const double n = static_cast<double>(layout.scene_size[s]);
    inv[s] = 1.0 / (n * (n - 1.0));
  }
  return ops::mul_col(ops::scatter_add_rows(z, layout.edge_scene, layout.num_scenes), constant_column(std::move(inv)));
}

Tensor degree_per_scene(const Tensor& z, const GraphLayout& layout) {
  check_edges(z, layout);
  const Tensor degrees = ops::scatter_add_rows(z, layout.dst, layout.num_nodes);
  std::vector<double> inv(layout.num_scenes);
  for (std::size_t s = 0; s < layout.num_scenes; ++s) inv[s] = 1.0 / static_cast<double>(layout.scene_size[s]);
  return ops::mul_col(ops::segment_max(degrees, layout.node_scene, layout.num_scenes), constant_column(std::move(inv)));
}

Tensor penalty_per_scene(Penalty penalty, const Tensor& z, const GraphLayout& layout) {
  switch (penalty) {
    case Penalty::kEntropy:
      return entropy_per_scene(z, layout);
    case Penalty::kDensity:
      return density_per_scene(z, layout);
    case Penalty::kDegree:
      return degree_per_scene(z, layout);
  }
  throw ContractError("unknown penalty");
}

namespace {

// Off-diagonal entries of an N x N tensor as an edge column in layout order.
std::pair<Tensor, GraphLayout> as_edges(const Tensor& z) {
  if (z.rank() != 2 || z.rows() != z.cols()) throw ShapeError("expected a square adjacency tensor");
  const std::size_t n = z.rows();
  if (n < 2) throw ContractError("graph statistics need N >= 2");
  const std::size_t sizes[1] = {n};
  GraphLayout layout = GraphLayout::build(sizes);
  std::vector<std::size_t> flat;
  for (std::size_t e = 0; e < layout.num_edges(); ++e) flat.push_back(layout.src[e] * n + layout.dst[e]);
  Tensor column = ops::gather_rows(ops::reshape(z, {n * n, 1}), flat);
  return {column, std::move(layout)};
}

}  // namespace

Tensor graph_entropy(const Tensor& z) {
  auto [edges, layout] = as_edges(z);
  return ops::reshape(entropy_per_scene(edges, layout), {});
}

Tensor r_density(const Tensor& z) {
  auto [edges, layout] = as_edges(z);
  return ops::reshape(density_per_scene(edges, layout), {});
}

Tensor r_degree(const Tensor& z) {
  auto [edges, layout] = as_edges(z);
  return ops::reshape(degree_per_scene(edges, layout), {});
}

Tensor regularized_loss(const Tensor& recon, const std::vector<Tensor>& window_penalties, double gamma) {
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  if (gamma == 0.0 || window_penalties.empty()) return recon;
  Tensor total = window_penalties.front();
  for (std::size_t m = 1; m < window_penalties.size(); ++m) total = ops::add(total, window_penalties[m]);
  return ops::add(recon, ops::scale(total, gamma / static_cast<double>(window_penalties.size())));
}

}  // namespace himrae
