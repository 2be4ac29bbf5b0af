// Copyright 2026 The spkmrc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spkmrc/optimizer.h"

#include <cmath>

#include "spkmrc/errors.h"

namespace spkmrc {

Real GradientNorm(std::span<Parameter* const> params) {
  Real total = 0.0;
  for (const Parameter* p : params) {
    for (Real g : p->grad.data()) total += g * g;
  }
  return std::sqrt(total);
}

Real AdamWStep(std::span<Parameter* const> params, AdamWState& state,
               const AdamWConfig& config) {
  for (const Parameter* p : params) {
    for (Real g : p->grad.data()) {
      if (!std::isfinite(g)) throw NonFinite("non-finite gradient in " + p->name);
    }
  }
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.rows(), p->value.cols());
      state.second_moment.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adamw: optimizer state holds " +
                     std::to_string(state.first_moment.size()) + " moments for " +
                     std::to_string(params.size()) + " parameters");
  }

  const Real norm = GradientNorm(params);
  const Real clip =
      config.clip_norm > 0.0 && norm > config.clip_norm ? config.clip_norm / norm : 1.0;

  ++state.step;
  const Real t = static_cast<Real>(state.step);
  const Real correction1 = 1.0 - std::pow(config.beta1, t);
  const Real correction2 = 1.0 - std::pow(config.beta2, t);
  const Real lr = config.learning_rate;

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const Real g = p.grad[i] * clip;
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const Real m_hat = m[i] / correction1;
      const Real v_hat = v[i] / correction2;
      p.value[i] -= lr * (m_hat / (std::sqrt(v_hat) + config.eps) +
                          config.weight_decay * p.value[i]);
    }
  }
  return norm;
}

}  // namespace spkmrc
