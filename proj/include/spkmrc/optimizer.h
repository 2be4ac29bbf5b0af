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

// Adam with decoupled weight decay, preceded by global-norm clipping.

#ifndef SPKMRC_OPTIMIZER_H_
#define SPKMRC_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "spkmrc/autodiff.h"

namespace spkmrc {

struct AdamWConfig {
  Real learning_rate = 3e-5;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  Real weight_decay = 0.01;
  // <= 0 disables clipping.
  Real clip_norm = 1.0;
};

// Moments are parallel to the parameter list the steps are taken over.
struct AdamWState {
  std::int64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  bool operator==(const AdamWState&) const = default;
};

// Global L2 norm over all gradients.
Real GradientNorm(std::span<Parameter* const> params);

// One update:
//   g <- g * min(1, clip / ||g||)
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   theta <- theta - lr (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
//                  - lr wd theta
// Returns the pre-clip gradient norm. Throws NonFinite, naming the parameter,
// before touching anything if a gradient holds NaN or Inf.
Real AdamWStep(std::span<Parameter* const> params, AdamWState& state,
               const AdamWConfig& config);

}  // namespace spkmrc

#endif  // SPKMRC_OPTIMIZER_H_
