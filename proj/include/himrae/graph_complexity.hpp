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
#include <string>
#include <vector>

#include "himrae/graph_layout.hpp"
#include "himrae/tensor.hpp"

namespace himrae {

/// Normalised in-degree vector of a directed graph.
struct DegreeDistribution {
  std::vector<double> p;        // d_j / |E|; all zeros when |E| = 0
  std::vector<double> degrees;  // d_j = sum_i z_ij
  double edges = 0.0;           // |E|
};

/// `z` is row-major N x N with z[i * N + j] the (relaxed) edge i -> j.
DegreeDistribution degree_distribution(std::span<const double> z, std::size_t n);

/// Normalised in-degree Shannon entropy in [0, 1]:
///   H = -(1 / ln N) sum_j (d_j / |E|) ln(d_j / |E|),  0 ln 0 := 0, H := 0 when |E| = 0.
/// Evaluated as sum_j d_j ln(|E| / d_j) / (|E| ln N), which is exact at both
/// extremes (uniform degrees give 1, a single hub gives 0).
double graph_entropy(std::span<const double> z, std::size_t n);
double graph_entropy_of_degrees(std::span<const double> degrees);

/// Closed-form minimum entropy over all simple directed graphs with N nodes
/// and |E| edges: with |E| = k (N - 1) + e, 0 <= e < N - 1,
///   [k (N-1)/|E| ln(|E|/(N-1)) - e/|E| ln(e/|E|)] / ln N.
double min_graph_entropy(std::size_t n, std::size_t edges);

/// True iff the descending prefix sums of x dominate those of y.
/// Requires equal lengths and sums (within 1e-9).
bool majorizes(std::span<const double> x, std::span<const double> y);

/// Hardy-Littlewood-Polya for phi(u) = -u ln u: given x majorizes y on the
/// simplex, checks sum phi(x) <= sum phi(y).
bool verify_hlp(std::span<const double> x, std::span<const double> y);
double shannon_entropy(std::span<const double> p);

double r_density(std::span<const double> z, std::size_t n);
double r_degree(std::span<const double> z, std::size_t n);

enum class Penalty { kEntropy, kDensity, kDegree };
Penalty parse_penalty(const std::string& name);
std::string to_string(Penalty penalty);

/// Differentiable per-scene statistics of edge weights z [E x 1] laid out by
/// `layout`; each returns [S x 1]. Entropy uses a log floor of 1e-12 on
/// degrees, which only affects degrees below the floor.
Tensor entropy_per_scene(const Tensor& z, const GraphLayout& layout);
Tensor density_per_scene(const Tensor& z, const GraphLayout& layout);
/// max_j d_j / N; the subgradient goes to the lowest-index maximiser.
Tensor degree_per_scene(const Tensor& z, const GraphLayout& layout);
Tensor penalty_per_scene(Penalty penalty, const Tensor& z, const GraphLayout& layout);

/// Differentiable single-graph forms over an N x N tensor (diagonal ignored).
Tensor graph_entropy(const Tensor& z);
Tensor r_density(const Tensor& z);
Tensor r_degree(const Tensor& z);

/// L' = L + (gamma / M) sum_m penalty_m, with one scalar penalty per window.
Tensor regularized_loss(const Tensor& recon, const std::vector<Tensor>& window_penalties, double gamma);

}  // namespace himrae
