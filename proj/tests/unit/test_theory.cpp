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

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "himrae/graph_complexity.hpp"
#include "himrae/theory.hpp"

using namespace himrae;

TEST_CASE("error bounds: worked values") {
  const Bounds b = mixup_error_bounds({2.0, 0.01, 3, 0.1});
  CHECK(b.b1 == doctest::Approx(0.87).epsilon(1e-14));
  CHECK(b.b2 == doctest::Approx(0.47).epsilon(1e-14));
  CHECK(b.b3 == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(mixup_error_bounds({1.0, 0.01, 5, 0.0}).b1 == doctest::Approx(0.05).epsilon(1e-14));
  const Bounds z = mixup_error_bounds({1.3, 0.0, 4, 0.0});
  CHECK(z.b1 == 0.0);
  CHECK(z.b2 == 0.0);
  CHECK(z.b3 == 0.0);
}

TEST_CASE("error bounds: the recurrence eps_n = L eps_{n-1} + eps unrolls to b1") {
  RngStream rng(1, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const double l = rng.uniform(0.2, 2.0), eps = rng.uniform(0.0, 0.2), gap = rng.uniform(0.0, 1.0);
    double e = gap;
    for (std::size_t n = 1; n <= 12; ++n) {
      e = l * e + eps;
      CHECK(mixup_error_bounds({l, eps, n, gap}).b1 == doctest::Approx(e).epsilon(1e-12));
    }
  }
}

TEST_CASE("random affine systems have the requested spectral norm") {
  RngStream rng(2, 0);
  for (double l : {0.5, 1.0, 1.37}) {
    const AffineSystem s = random_affine_system(4, l, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.a);
    CHECK(svd.singularValues()(0) == doctest::Approx(l).epsilon(1e-12));
  }
}

TEST_CASE("contraction: deviation shrinks with the horizon when eps is 0") {
  RngStream rng(3, 0);
  const AffineSystem s = random_affine_system(4, 0.5, rng);
  Eigen::VectorXd x = Eigen::VectorXd::Random(4), y = x + Eigen::VectorXd::Constant(4, 0.3);
  double prev = (x - y).norm();
  for (int n = 0; n < 10; ++n) {
    x = s.apply(x);
    y = s.apply(y);
    const double d = (x - y).norm();
    CHECK(d < prev);
    CHECK(d <= 0.5 * prev + 1e-15);
    prev = d;
  }
}

TEST_CASE("error bounds hold on random affine dynamics") {
  RngStream rng(4, 0);
  const ErrorBoundReport r = verify_error_bounds(rng, 1000);
  CHECK(r.trials == 1000);
  CHECK(r.item1_violations == 0);
  CHECK(r.item2_violations == 0);
  CHECK(r.item3_violations == 0);
  CHECK(r.ordering_violations == 0);
}

TEST_CASE("brute-force minimum entropy on small cases") {
  CHECK(brute_force_min_entropy(3, 3) == doctest::Approx(min_graph_entropy(3, 3)).epsilon(1e-14));
  CHECK(brute_force_min_entropy(5, 0) == 0.0);
  CHECK(brute_force_min_entropy(4, 12) == doctest::Approx(1.0).epsilon(1e-15));
}
