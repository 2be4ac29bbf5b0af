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

// Binary checkpoints: configuration, vocabulary, step counter, parameters and
// optimizer moments. Round trips are bit-exact.

#ifndef SPKMRC_CHECKPOINT_H_
#define SPKMRC_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spkmrc/autodiff.h"
#include "spkmrc/config.h"
#include "spkmrc/corpus.h"
#include "spkmrc/model.h"
#include "spkmrc/optimizer.h"

namespace spkmrc {

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  TrainConfig config;
  Vocabulary vocab;
  std::int64_t step = 0;
  std::vector<NamedTensor> params;
  // Empty moments mean no optimizer step was taken.
  AdamWState optimizer;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint MakeCheckpoint(const TrainConfig& config, const Vocabulary& vocab,
                          const SpeakerMrcModel& model, const AdamWState& optimizer,
                          std::int64_t step);

// Writes to a temporary sibling and renames it into place.
void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws CheckpointError on a truncated or malformed file.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Rebuilds the model the checkpoint was taken from. Throws CheckpointError
// when names or shapes disagree with the configuration.
SpeakerMrcModel RestoreModel(const Checkpoint& checkpoint);

}  // namespace spkmrc

#endif  // SPKMRC_CHECKPOINT_H_
