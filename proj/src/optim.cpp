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

#include "himrae/optim.hpp"

#include <cmath>

#include "himrae/errors.hpp"

namespace himrae {

void Adam::step(ParamStore& params, const GradMap& grads) {
  const auto keys = params.param_keys();
  if (grads.size() != keys.size()) {
    throw ContractError("Adam::step: gradient map has " + std::to_string(grads.size()) + " keys, expected " +
                        std::to_string(keys.size()));
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (const auto& key : keys) {
    auto git = grads.find(key);
    if (git == grads.end()) throw ContractError("Adam::step: missing gradient for " + key);
    Tensor p = params.get(key);
    auto values = p.mutable_values();
    const auto& g = git->second;
    if (g.size() != values.size()) throw ContractError("Adam::step: gradient size mismatch for " + key);
    auto& mom = moments_[key];
    if (mom.m.empty()) {
      mom.m.assign(values.size(), 0.0);
      mom.v.assign(values.size(), 0.0);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g[i];
      mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = mom.m[i] / correction1;
      const double v_hat = mom.v[i] / correction2;
      values[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace himrae
