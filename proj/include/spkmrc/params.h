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

#ifndef SPKMRC_PARAMS_H_
#define SPKMRC_PARAMS_H_

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "spkmrc/autodiff.h"

namespace spkmrc {

// Owns every learnable tensor of a model, in registration order. Parameter
// addresses are stable for the lifetime of the collection.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(const ModelParams&) = delete;
  ModelParams& operator=(const ModelParams&) = delete;
  ModelParams(ModelParams&&) = default;
  ModelParams& operator=(ModelParams&&) = default;

  // Registers a parameter filled with `fill`. Throws Error on a duplicate name.
  Parameter& Add(std::string name, std::size_t rows, std::size_t cols,
                 Real fill = 0.0);
  // Registers a parameter drawn from N(0, stddev^2).
  Parameter& AddNormal(std::string name, std::size_t rows, std::size_t cols,
                       Real stddev, std::mt19937_64& rng);

  Parameter* Find(std::string_view name);
  const Parameter* Find(std::string_view name) const;
  // Like Find but throws Error when missing.
  Parameter& At(std::string_view name);

  const std::vector<std::unique_ptr<Parameter>>& items() const { return items_; }
  std::vector<Parameter*> pointers() const;
  std::size_t size() const { return items_.size(); }

  // Number of scalar entries across all parameters.
  std::size_t TotalCount() const;
  // Sum of entries of parameters whose name starts with `prefix`.
  std::size_t CountWithPrefix(std::string_view prefix) const;

  void ZeroGrad();

 private:
  std::vector<std::unique_ptr<Parameter>> items_;
};

}  // namespace spkmrc

#endif  // SPKMRC_PARAMS_H_
