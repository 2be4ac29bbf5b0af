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

// Training loop, evaluation and prediction.

#ifndef SPKMRC_TRAINER_H_
#define SPKMRC_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spkmrc/checkpoint.h"
#include "spkmrc/config.h"
#include "spkmrc/corpus.h"
#include "spkmrc/metrics.h"
#include "spkmrc/model.h"

namespace spkmrc {

struct LossRecord {
  std::int64_t step = 0;
  Real mean_loss = 0.0;
  bool operator==(const LossRecord&) const = default;
};

// "step,mean_loss" with every loss printed to 17 significant digits.
std::string LossLogToCsv(std::span<const LossRecord> log);

struct TrainOptions {
  // When set, receives config.txt, loss_log.csv, checkpoint.bin and periodic
  // step-N.bin checkpoints.
  std::optional<std::filesystem::path> out_dir;
  // Progress lines; null for silence.
  std::ostream* progress = nullptr;
};

struct TrainResult {
  std::vector<LossRecord> loss_log;
  std::int64_t steps = 0;
  bool stopped_early = false;
  // Last train-set evaluation, when eval_every > 0.
  std::optional<EvalReport> last_train_report;
  Checkpoint checkpoint;
  double seconds = 0.0;
};

// Every question of every dialogue becomes one example. Steps draw batches
// from a seeded per-epoch shuffle; each batch accumulates per-example
// gradients of loss / batch_size, then clips and takes one AdamW step.
// Throws NonFinite when a loss or gradient stops being finite.
TrainResult Train(std::span<const Dialogue> corpus, const TrainConfig& config,
                  const TrainOptions& options = {});

// Encodes every question against `vocab`.
std::vector<PreparedExample> PrepareCorpus(std::span<const Dialogue> corpus,
                                           const Vocabulary& vocab, int max_len);

Predictions Predict(const SpeakerMrcModel& model, std::span<const PreparedExample> examples,
                    int max_answer_len, Real null_threshold);

struct Evaluation {
  EvalReport report;
  Predictions predictions;
};

Evaluation Evaluate(const SpeakerMrcModel& model, const TrainConfig& config,
                    const Vocabulary& vocab, std::span<const Dialogue> corpus);
Evaluation Evaluate(const Checkpoint& checkpoint, std::span<const Dialogue> corpus);

}  // namespace spkmrc

#endif  // SPKMRC_TRAINER_H_
