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

#include "spkmrc/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace spkmrc {
namespace {

Real Evaluate(const LossFn& f) {
  Tape tape;
  return f(tape).value().item();
}

}  // namespace

GradCheckResult GradCheck(const LossFn& f, std::span<Parameter* const> params,
                          const GradCheckOptions& options) {
  for (Parameter* p : params) p->ZeroGrad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.Backward(loss);
  }

  GradCheckResult result;
  std::mt19937_64 rng(options.seed);
  for (Parameter* p : params) {
    std::vector<std::size_t> coords(p->value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.samples_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.samples_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const Real original = p->value[i];
      p->value[i] = original + options.eps;
      const Real plus = Evaluate(f);
      p->value[i] = original - options.eps;
      const Real minus = Evaluate(f);
      p->value[i] = original;

      const Real numeric = (plus - minus) / (2.0 * options.eps);
      const Real analytic = p->grad[i];
      const Real diff = std::abs(analytic - numeric);
      ++result.coords_checked;
      if (std::abs(analytic) <= options.abs_tolerance &&
          std::abs(numeric) <= options.abs_tolerance) {
        ++result.coords_at_noise_floor;
        continue;
      }
      const Real rel = diff / std::max(options.min_scale, std::abs(analytic) + std::abs(numeric));
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        if (rel >= result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_param = p->name;
          result.worst_index = i;
          result.worst_analytic = analytic;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

GradCheckResult GradCheck(const LossFn& f, ModelParams& params,
                          const GradCheckOptions& options) {
  std::vector<Parameter*> ptrs = params.pointers();
  return GradCheck(f, ptrs, options);
}

}  // namespace spkmrc
