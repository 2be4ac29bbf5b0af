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

#include "spkmrc/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "spkmrc/errors.h"
#include "spkmrc/optimizer.h"

namespace spkmrc {
namespace {

// Keeps the shuffle and dropout streams independent of each other.
constexpr std::uint64_t kShuffleStream = 0x5bd1e995ull;
constexpr std::uint64_t kDropoutStream = 0x9e3779b97f4a7c15ull;

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

std::string LossLogToCsv(std::span<const LossRecord> log) {
  std::string out = "step,mean_loss\n";
  char buf[64];
  for (const LossRecord& r : log) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(r.step), r.mean_loss);
    out += buf;
  }
  return out;
}

std::vector<PreparedExample> PrepareCorpus(std::span<const Dialogue> corpus,
                                           const Vocabulary& vocab, int max_len) {
  std::vector<PreparedExample> out;
  for (const Dialogue& d : corpus) {
    for (const Question& q : d.questions) {
      out.push_back(Prepare(EncodeExample(d, q, vocab, max_len)));
    }
  }
  return out;
}

Predictions Predict(const SpeakerMrcModel& model, std::span<const PreparedExample> examples,
                    int max_answer_len, Real null_threshold) {
  Predictions out;
  for (const PreparedExample& ex : examples) {
    out[ex.example.question_id] = model.Predict(ex, max_answer_len, null_threshold).text;
  }
  return out;
}

Evaluation Evaluate(const SpeakerMrcModel& model, const TrainConfig& config,
                    const Vocabulary& vocab, std::span<const Dialogue> corpus) {
  const std::vector<PreparedExample> examples = PrepareCorpus(corpus, vocab, config.encoder.max_len);
  Evaluation ev;
  ev.predictions = Predict(model, examples, config.max_answer_len, config.null_threshold);
  ev.report = ScorePredictions(corpus, ev.predictions);
  return ev;
}

Evaluation Evaluate(const Checkpoint& checkpoint, std::span<const Dialogue> corpus) {
  const SpeakerMrcModel model = RestoreModel(checkpoint);
  return Evaluate(model, checkpoint.config, checkpoint.vocab, corpus);
}

TrainResult Train(std::span<const Dialogue> corpus, const TrainConfig& config,
                  const TrainOptions& options) {
  config.Validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Vocabulary vocab = BuildVocabulary(corpus, config.min_freq);
  const std::vector<PreparedExample> examples =
      PrepareCorpus(corpus, vocab, config.encoder.max_len);
  if (examples.empty()) throw DataError("training corpus has no questions");

  SpeakerMrcModel model(
      config.ToModelConfig(static_cast<int>(vocab.size()), static_cast<int>(vocab.num_relations())),
      config.seed);
  const std::vector<Parameter*> params = model.params().pointers();
  AdamWConfig adam;
  adam.learning_rate = config.learning_rate;
  adam.weight_decay = config.weight_decay;
  adam.clip_norm = config.clip_norm;
  AdamWState state;

  std::mt19937_64 shuffle_rng(config.seed ^ kShuffleStream);
  std::mt19937_64 dropout_rng(config.seed ^ kDropoutStream);
  std::mt19937_64* dropout = config.encoder.dropout > 0.0 ? &dropout_rng : nullptr;

  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    WriteText(*options.out_dir / "config.txt", config.ToText());
  }

  TrainResult result;
  std::vector<std::size_t> order(examples.size());
  std::size_t cursor = order.size();
  int epoch = -1;
  const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                                       examples.size());

  for (std::int64_t step = 1; step <= config.max_steps; ++step) {
    std::vector<std::size_t> batch;
    while (batch.size() < batch_size) {
      if (cursor == order.size()) {
        ++epoch;
        if (config.max_epochs > 0 && epoch >= config.max_epochs) break;
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    if (batch.empty()) break;
    std::sort(batch.begin(), batch.end());
    const Real inv_batch = 1.0 / static_cast<Real>(batch.size());

    model.params().ZeroGrad();
    Real total = 0.0;
    for (std::size_t idx : batch) {
      Tape tape;
      const SpeakerMrcModel::Output out = model.Forward(tape, examples[idx], dropout);
      const Real loss = out.loss.value().item();
      if (!std::isfinite(loss)) {
        throw NonFinite("non-finite loss " + std::to_string(loss) + " at step " +
                        std::to_string(step) + " on question " + examples[idx].example.question_id);
      }
      total += loss;
      tape.Backward(scale(out.loss, inv_batch));
    }
    AdamWStep(params, state, adam);
    result.loss_log.push_back({step, total / static_cast<Real>(batch.size())});
    result.steps = step;

    if (options.progress && (step == 1 || step % 50 == 0)) {
      *options.progress << "step " << step << " loss " << result.loss_log.back().mean_loss << "\n";
    }
    if (options.out_dir && config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      SaveCheckpoint(MakeCheckpoint(config, vocab, model, state, step),
                     *options.out_dir / ("step-" + std::to_string(step) + ".bin"));
    }
    if (config.eval_every > 0 && step % config.eval_every == 0) {
      result.last_train_report = Evaluate(model, config, vocab, corpus).report;
      if (options.progress) {
        *options.progress << "step " << step << " train " << result.last_train_report->Summary()
                          << "\n";
      }
      if (config.stop_at_train_em >= 0.0 && result.last_train_report->em >= config.stop_at_train_em) {
        result.stopped_early = true;
        break;
      }
    }
  }

  result.checkpoint = MakeCheckpoint(config, vocab, model, state, result.steps);
  if (options.out_dir) {
    SaveCheckpoint(result.checkpoint, *options.out_dir / "checkpoint.bin");
    WriteText(*options.out_dir / "loss_log.csv", LossLogToCsv(result.loss_log));
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace spkmrc
