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

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "himrae/rng.hpp"

namespace himrae {

/// Minimum normalised in-degree entropy over all in-degree vectors with
/// sum |E| and entries in [0, N-1], by enumeration of non-increasing vectors.
/// Every such vector is realised by a simple directed graph.
double brute_force_min_entropy(std::size_t n, std::size_t edges);

struct EntropyMinRow {
  std::size_t n = 0;
  std::size_t edges = 0;
  double closed_form = 0.0;
  double brute_force = 0.0;
  bool match = false;  // |closed - brute| <= 1e-12
};

/// Every N in [2, max_n] and |E| in [0, N(N-1)].
std::vector<EntropyMinRow> entropy_minimizer_table(std::size_t max_n);

/// min_graph_entropy(N, .) is non-decreasing in |E| for every N in [2, max_n].
bool min_entropy_monotone(std::size_t max_n);

/// x majorizes y by construction: y is obtained from a random simplex point
/// x by Robin-Hood transfers (rich to poor, never overshooting the mean of
/// the pair).
struct MajorizingPair {
  std::vector<double> x, y;
};
MajorizingPair random_majorizing_pair(std::size_t n, std::size_t transfers, RngStream& rng);

struct HlpReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;      // sum phi(x) > sum phi(y) + 1e-12
  std::size_t not_majorizing = 0;  // construction failures (expected 0)
};
HlpReport verify_hlp_pairs(std::size_t pairs, RngStream& rng);

struct BoundScenario {
  double lipschitz = 1.0;  // L_f > 0
  double epsilon = 0.0;    // single-step error bound
  std::size_t horizon = 1; // n
  double gap = 0.0;        // ||Xhat^t - X^t||
};

struct Bounds {
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;
};

/// b1 = L^n gap + (L^n - 1)/(L - 1) eps, with the fraction = n at L = 1;
/// b2 = L^n gap / 2 + the same eps term; b3 = L^n gap / 2.
Bounds mixup_error_bounds(const BoundScenario& s);

/// f(x) = A x + b with spectral norm ||A||_2 = lipschitz.
struct AffineSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return a * x + b; }
};
AffineSystem random_affine_system(std::size_t dim, double lipschitz, RngStream& rng);

struct ErrorBoundReport {
  std::size_t trials = 0;
  std::size_t item1_violations = 0;     // pathwise, every n
  std::size_t item2_violations = 0;     // lambda-mean beyond 3 sigma slack
  std::size_t item3_violations = 0;
  std::size_t ordering_violations = 0;  // b3 <= b2 <= b1
  bool passed() const {
    return item1_violations == 0 && item2_violations == 0 && item3_violations == 0 && ordering_violations == 0;
  }
};

/// Random affine systems (dimension 4, L in [0.5, 1.5] with some trials at
/// exactly 1), truth trajectories X^{t+1} = f(X^t) + eta with ||eta|| <= eps,
/// horizons up to 10 and `lambda_draws` Beta(alpha, alpha) coefficients per
/// trial with alpha drawn from [0.1, 10].
ErrorBoundReport verify_error_bounds(RngStream& rng, std::size_t trials, std::size_t lambda_draws = 200);

}  // namespace himrae
