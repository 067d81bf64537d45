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

#include <cstdint>
#include <random>

namespace himrae {

/// Seeded random stream. Two streams built from the same (seed, stream id)
/// produce identical draw sequences on every platform: the engine is
/// mt19937_64 and all distributions are implemented here rather than taken
/// from <random>, whose distributions are implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Independent child stream; deterministic in (seed, stream id, key).
  RngStream derive(std::uint64_t key) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);
  double normal();
  /// ln(u) - ln(1 - u) for u ~ U(0,1): the logistic noise of binary concrete.
  double logistic();
  bool bernoulli(double p) { return uniform() < p; }
  /// Gamma(shape, 1). Marsaglia-Tsang; shape < 1 uses the U^(1/shape) boost.
  double gamma(double shape);
  /// Beta(a, b) as a ratio of gamma draws.
  double beta(double a, double b);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace himrae
