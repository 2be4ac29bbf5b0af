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

#ifndef SPKMRC_GRAD_CHECK_H_
#define SPKMRC_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "spkmrc/autodiff.h"
#include "spkmrc/params.h"

namespace spkmrc {

struct GradCheckOptions {
  Real eps = 1e-5;
  // Coordinates sampled per parameter; smaller parameters are checked fully.
  std::size_t samples_per_param = 100;
  std::uint64_t seed = 1;
  // Coordinates whose analytic and numeric values are both at most this
  // large are finite-difference roundoff around a zero gradient and are not
  // scored, e.g. a bias under a shift-invariant softmax.
  Real abs_tolerance = 1e-10;
  // Floor of the relative error's denominator |a| + |n|. Below it the error
  // is effectively absolute, so tiny gradients are not swamped by roundoff.
  Real min_scale = 1e-6;
};

struct GradCheckResult {
  Real max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_at_noise_floor = 0;
  // Location of the worst coordinate.
  std::string worst_param;
  std::size_t worst_index = 0;
  Real worst_analytic = 0.0;
  Real worst_numeric = 0.0;
};

// Builds a scalar loss on the given tape from the current parameter values.
// Must be deterministic.
using LossFn = std::function<Var(Tape&)>;

// Compares backward() gradients with central differences
// (f(x + eps) - f(x - eps)) / (2 eps) on sampled coordinates. The relative
// error of a coordinate is |a - n| / max(1e-8, |a| + |n|), or 0 when
// |a - n| <= abs_tolerance. Parameter gradients
// are overwritten.
GradCheckResult GradCheck(const LossFn& f, std::span<Parameter* const> params,
                          const GradCheckOptions& options = {});
GradCheckResult GradCheck(const LossFn& f, ModelParams& params,
                          const GradCheckOptions& options = {});

}  // namespace spkmrc

#endif  // SPKMRC_GRAD_CHECK_H_
