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

// Finite-difference checks of every module and of the full model on a small
// fixed dialogue.

#ifndef SPKMRC_GRAD_SUITE_H_
#define SPKMRC_GRAD_SUITE_H_

#include <string>
#include <vector>

#include "spkmrc/config.h"
#include "spkmrc/corpus.h"
#include "spkmrc/grad_check.h"

namespace spkmrc {

// Two utterances by two speakers joined by one relation, one answerable
// question.
Dialogue GradCheckDialogue();

struct ModuleGradCheck {
  std::string module;
  GradCheckResult result;
  Real tolerance = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

// "encoder", "speaker_attention", "speaker_graph", "discourse_graph",
// "span_model", "model".
const std::vector<std::string>& GradCheckModules();

// Module inputs that would come from upstream layers are parameters of the
// check, so input gradients are verified too. Modules use tolerance 1e-6, the
// full model 1e-4. Throws ConfigError for an unknown module.
ModuleGradCheck RunModuleGradCheck(const std::string& module, const TrainConfig& config,
                                   const GradCheckOptions& options = {});

}  // namespace spkmrc

#endif  // SPKMRC_GRAD_SUITE_H_
