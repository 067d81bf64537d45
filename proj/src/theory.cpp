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

#include "himrae/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "himrae/errors.hpp"
#include "himrae/graph_complexity.hpp"

namespace himrae {

double brute_force_min_entropy(std::size_t n, std::size_t edges) {
  if (n < 2) throw ContractError("brute_force_min_entropy: N >= 2 required");
  if (edges > n * (n - 1)) throw ContractError("brute_force_min_entropy: |E| exceeds N(N-1)");
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, 0.0);
  std::function<void(std::size_t, std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left,
                                                                       std::size_t cap) {
    if (pos == n) {
      if (left == 0) best = std::min(best, graph_entropy_of_degrees(d));
      return;
    }
    // Remaining slots can absorb at most cap each.
    if (left > cap * (n - pos)) return;
    for (std::size_t v = std::min(cap, left) + 1; v-- > 0;) {
      d[pos] = static_cast<double>(v);
      rec(pos + 1, left - v, v);
    }
  };
  rec(0, edges, n - 1);
  return best;
}

std::vector<EntropyMinRow> entropy_minimizer_table(std::size_t max_n) {
  std::vector<EntropyMinRow> rows;
  for (std::size_t n = 2; n <= max_n; ++n)
    for (std::size_t e = 0; e <= n * (n - 1); ++e) {
      EntropyMinRow r{n, e, min_graph_entropy(n, e), brute_force_min_entropy(n, e), false};
      r.match = std::abs(r.closed_form - r.brute_force) <= 1e-12;
      rows.push_back(r);
    }
  return rows;
}

bool min_entropy_monotone(std::size_t max_n) {
  for (std::size_t n = 2; n <= max_n; ++n)
    for (std::size_t e = 1; e <= n * (n - 1); ++e)
      if (min_graph_entropy(n, e) < min_graph_entropy(n, e - 1)) return false;
  return true;
}

MajorizingPair random_majorizing_pair(std::size_t n, std::size_t transfers, RngStream& rng) {
  if (n < 2) throw ContractError("random_majorizing_pair: n >= 2 required");
  MajorizingPair p;
  p.x.resize(n);
  // Exponential spacings give a uniform simplex point; sparsify some entries
  // so that the boundary (0 ln 0) is exercised.
  for (double& v : p.x) v = rng.uniform() < 0.2 ? 0.0 : -std::log(rng.uniform());
  if (std::accumulate(p.x.begin(), p.x.end(), 0.0) == 0.0) p.x[0] = 1.0;
  const double s = std::accumulate(p.x.begin(), p.x.end(), 0.0);
  for (double& v : p.x) v /= s;
  p.y = p.x;
  for (std::size_t k = 0; k < transfers; ++k) {
    std::size_t i = rng.uniform_int(n), j = rng.uniform_int(n);
    if (i == j) continue;
    if (p.y[i] < p.y[j]) std::swap(i, j);
    const double amount = rng.uniform() * 0.5 * (p.y[i] - p.y[j]);
    p.y[i] -= amount;
    p.y[j] += amount;
  }
  return p;
}

HlpReport verify_hlp_pairs(std::size_t pairs, RngStream& rng) {
  HlpReport rep;
  for (std::size_t k = 0; k < pairs; ++k) {
    const std::size_t n = 2 + rng.uniform_int(9);
    const auto p = random_majorizing_pair(n, 1 + rng.uniform_int(20), rng);
    ++rep.pairs;
    if (!majorizes(p.x, p.y)) {
      ++rep.not_majorizing;
      continue;
    }
    if (!verify_hlp(p.x, p.y)) ++rep.violations;
  }
  return rep;
}

Bounds mixup_error_bounds(const BoundScenario& s) {
  if (!(s.lipschitz > 0.0) || !(s.epsilon >= 0.0) || s.horizon < 1 || !(s.gap >= 0.0)) {
    throw ContractError("mixup_error_bounds: need L > 0, eps >= 0, n >= 1, gap >= 0");
  }
  const double ln = std::pow(s.lipschitz, static_cast<double>(s.horizon));
  const double geometric = s.lipschitz == 1.0 ? static_cast<double>(s.horizon) : (ln - 1.0) / (s.lipschitz - 1.0);
  Bounds b;
  b.b3 = 0.5 * ln * s.gap;
  b.b2 = b.b3 + geometric * s.epsilon;
  b.b1 = ln * s.gap + geometric * s.epsilon;
  return b;
}

namespace {

Eigen::VectorXd random_direction(std::size_t dim, RngStream& rng) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

AffineSystem random_affine_system(std::size_t dim, double lipschitz, RngStream& rng) {
  if (dim == 0 || !(lipschitz > 0.0)) throw ContractError("random_affine_system: need dim >= 1 and L > 0");
  const auto d = static_cast<Eigen::Index>(dim);
  AffineSystem sys{Eigen::MatrixXd(d, d), Eigen::VectorXd(d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    sys.b[i] = rng.normal();
    for (Eigen::Index j = 0; j < d; ++j) sys.a(i, j) = rng.normal();
  }
  const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(sys.a).singularValues()[0];
  sys.a *= lipschitz / sigma;
  return sys;
}

ErrorBoundReport verify_error_bounds(RngStream& rng, std::size_t trials, std::size_t lambda_draws) {
  constexpr std::size_t kDim = 4;
  constexpr std::size_t kMaxHorizon = 10;
  constexpr double kTol = 1e-9;
  ErrorBoundReport rep;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    ++rep.trials;
    const double lip = trial % 10 == 0 ? 1.0 : rng.uniform(0.5, 1.5);
    const double eps = trial % 7 == 0 ? 0.0 : rng.uniform(0.0, 0.1);
    const double gap = trial % 11 == 0 ? 0.0 : rng.uniform(0.0, 1.0);
    const double alpha = rng.uniform(0.1, 10.0);
    const AffineSystem sys = random_affine_system(kDim, lip, rng);

    // Truth with single-step error of the model bounded by eps.
    std::vector<Eigen::VectorXd> truth{Eigen::VectorXd(random_direction(kDim, rng) * rng.uniform(0.0, 2.0))};
    for (std::size_t t = 0; t < kMaxHorizon; ++t)
      truth.push_back(sys.apply(truth.back()) + random_direction(kDim, rng) * eps * rng.uniform());
    const Eigen::VectorXd xhat = truth[0] + random_direction(kDim, rng) * gap;

    std::vector<double> lambdas(lambda_draws);
    for (double& l : lambdas) l = rng.beta(alpha, alpha);

    Eigen::VectorXd free = xhat;
    std::vector<Eigen::VectorXd> mixed;
    for (double l : lambdas) mixed.push_back(l * xhat + (1.0 - l) * truth[0]);
    bool bad1 = false, bad2 = false, bad3 = false, bad_order = false;
    for (std::size_t n = 1; n <= kMaxHorizon; ++n) {
      free = sys.apply(free);
      for (auto& m : mixed) m = sys.apply(m);
      const Bounds b = mixup_error_bounds({lip, eps, n, gap});
      if (!(b.b3 <= b.b2 && b.b2 <= b.b1)) bad_order = true;
      if ((free - truth[n]).norm() > b.b1 + kTol) bad1 = true;

      // lambda-averages with a 3-sigma Monte-Carlo allowance.
      auto check = [&](auto&& value, double bound) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < mixed.size(); ++k) {
          const double v = value(k);
          s += v;
          s2 += v * v;
        }
        const double m = s / static_cast<double>(mixed.size());
        const double var = std::max(0.0, s2 / static_cast<double>(mixed.size()) - m * m);
        return m <= bound + 3.0 * std::sqrt(var / static_cast<double>(mixed.size())) + kTol;
      };
      if (!check([&](std::size_t k) { return (mixed[k] - truth[n]).norm(); }, b.b2)) bad2 = true;
      if (!check([&](std::size_t k) { return (free - mixed[k]).norm(); }, b.b3)) bad3 = true;
    }
    rep.item1_violations += bad1;
    rep.item2_violations += bad2;
    rep.item3_violations += bad3;
    rep.ordering_violations += bad_order;
  }
  return rep;
}

}  // namespace himrae
