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

#include "spkmrc/params.h"

#include "spkmrc/errors.h"

namespace spkmrc {

Parameter& ModelParams::Add(std::string name, std::size_t rows, std::size_t cols,
                            Real fill) {
  if (Find(name) != nullptr) throw Error("duplicate parameter name: " + name);
  items_.push_back(
      std::make_unique<Parameter>(std::move(name), Tensor(rows, cols, fill)));
  return *items_.back();
}

Parameter& ModelParams::AddNormal(std::string name, std::size_t rows,
                                  std::size_t cols, Real stddev,
                                  std::mt19937_64& rng) {
  Parameter& p = Add(std::move(name), rows, cols);
  std::normal_distribution<Real> dist(0.0, stddev);
  for (Real& v : p.value.data()) v = dist(rng);
  return p;
}

Parameter* ModelParams::Find(std::string_view name) {
  for (auto& p : items_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ModelParams::Find(std::string_view name) const {
  for (const auto& p : items_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ModelParams::At(std::string_view name) {
  Parameter* p = Find(name);
  if (p == nullptr) throw Error("unknown parameter: " + std::string(name));
  return *p;
}

std::vector<Parameter*> ModelParams::pointers() const {
  std::vector<Parameter*> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.get());
  return out;
}

std::size_t ModelParams::TotalCount() const { return CountWithPrefix(""); }

std::size_t ModelParams::CountWithPrefix(std::string_view prefix) const {
  std::size_t total = 0;
  for (const auto& p : items_) {
    if (std::string_view(p->name).starts_with(prefix)) total += p->value.size();
  }
  return total;
}

void ModelParams::ZeroGrad() {
  for (auto& p : items_) p->ZeroGrad();
}

}  // namespace spkmrc
