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

// Training configuration and its flat key=value text form.

#ifndef SPKMRC_CONFIG_H_
#define SPKMRC_CONFIG_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spkmrc/autodiff.h"
#include "spkmrc/model.h"

namespace spkmrc {

// Learning rates accepted as presets by the CLI (--lr-preset 0|1|2).
inline constexpr std::array<Real, 3> kLearningRatePresets = {3e-5, 5e-5, 4e-6};

struct TrainConfig {
  Real learning_rate = 3e-5;
  int batch_size = 1;
  int max_steps = 1000;
  // 0 means no epoch limit.
  int max_epochs = 0;
  std::uint64_t seed = 1;
  Real weight_decay = 0.01;
  // Global gradient-norm clip; <= 0 disables clipping.
  Real clip_norm = 1.0;
  AblationConfig ablation;
  EncoderConfig encoder;  // vocab_size is filled in from the vocabulary
  int graph_layers = 2;
  // Only 64 is supported.
  int precision = 64;
  int min_freq = 1;
  int max_answer_len = 30;
  Real null_threshold = 0.0;
  // Steps between periodic checkpoints; 0 writes only the final one.
  int checkpoint_every = 0;
  // Steps between train-set evaluations; 0 disables them.
  int eval_every = 0;
  // Stop once train EM (percent) reaches this at an evaluation; < 0 never.
  Real stop_at_train_em = -1.0;

  // Sets one field from text. Throws ConfigError on an unknown key or a
  // malformed value.
  void Set(std::string_view key, std::string_view value);
  std::string Get(std::string_view key) const;
  // Throws ConfigError.
  void Validate() const;

  // One "key = value" line per field, in Keys() order.
  std::string ToText() const;
  // Applies "key = value" lines on top of the current values. Blank lines and
  // lines starting with '#' are ignored.
  void ApplyText(std::string_view text);
  static TrainConfig FromText(std::string_view text);
  static TrainConfig FromFile(const std::filesystem::path& path);

  static const std::vector<std::string>& Keys();

  ModelConfig ToModelConfig(int vocab_size, int num_relation_labels) const;
  bool operator==(const TrainConfig&) const;
};

}  // namespace spkmrc

#endif  // SPKMRC_CONFIG_H_
