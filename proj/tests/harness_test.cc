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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "spkmrc/checkpoint.h"
#include "spkmrc/config.h"
#include "spkmrc/corpus.h"
#include "spkmrc/errors.h"
#include "spkmrc/metrics.h"
#include "spkmrc/model.h"
#include "spkmrc/optimizer.h"
#include "spkmrc/synth.h"
#include "spkmrc/trainer.h"
#include "test_util.h"

namespace spkmrc {
namespace {

namespace fs = std::filesystem;

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spkmrc_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void WriteFile(const fs::path& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

// ---- optimizer

struct OneParam {
  Parameter p{"w", Tensor(2, 3, {1.0, -2.0, 0.5, 3.0, 0.0, -1.0})};
  std::vector<Parameter*> list{&p};
};

TEST(AdamW, ZeroGradientAndNoDecayLeavesParameters) {
  OneParam w;
  const Tensor before = w.p.value;
  AdamWState state;
  AdamWConfig config;
  config.weight_decay = 0.0;
  for (int i = 0; i < 3; ++i) AdamWStep(w.list, state, config);
  EXPECT_EQ(w.p.value, before);
  EXPECT_EQ(state.step, 3);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  OneParam w;
  const Tensor before = w.p.value;
  w.p.grad.Fill(1.0);
  AdamWState state;
  AdamWConfig config;
  config.learning_rate = 0.1;
  config.weight_decay = 0.0;
  config.clip_norm = 0.0;
  AdamWStep(w.list, state, config);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_NEAR(before[i] - w.p.value[i], 0.1 / (1.0 + 1e-8), 1e-15);
  }
}

TEST(AdamW, DecayOnlyShrinksGeometrically) {
  OneParam w;
  const Tensor before = w.p.value;
  AdamWState state;
  AdamWConfig config;
  config.learning_rate = 0.1;
  config.weight_decay = 0.5;
  for (int i = 0; i < 4; ++i) AdamWStep(w.list, state, config);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_NEAR(w.p.value[i], before[i] * std::pow(0.95, 4), 1e-15);
  }
}

TEST(AdamW, ClipsByGlobalNorm) {
  Parameter a("a", Tensor(1, 2)), b("b", Tensor(1, 1));
  a.grad[0] = 3.0;
  a.grad[1] = 4.0;
  b.grad[0] = 12.0;  // global norm 13
  std::vector<Parameter*> list = {&a, &b};
  AdamWState state;
  AdamWConfig config;
  config.clip_norm = 1.0;
  EXPECT_DOUBLE_EQ(AdamWStep(list, state, config), 13.0);
  EXPECT_NEAR(state.first_moment[0][0], 0.1 * 3.0 / 13.0, 1e-15);
  EXPECT_NEAR(state.first_moment[1][0], 0.1 * 12.0 / 13.0, 1e-15);
  EXPECT_NEAR(state.second_moment[0][1], 0.001 * 16.0 / 169.0, 1e-15);
}

TEST(AdamW, NonFiniteGradientNamesParameter) {
  OneParam w;
  w.p.grad[4] = std::numeric_limits<Real>::quiet_NaN();
  AdamWState state;
  try {
    AdamWStep(w.list, state, AdamWConfig{});
    FAIL() << "expected NonFinite";
  } catch (const NonFinite& e) {
    EXPECT_NE(std::string(e.what()).find("w"), std::string::npos);
  }
}

// ---- metrics

TEST(Metrics, Normalization) {
  EXPECT_EQ(NormalizeAnswer("By the mount options"), "by mount options");
  EXPECT_EQ(NormalizeAnswer(""), "");
  EXPECT_EQ(NormalizeAnswer("  linux!  "), "linux");
  EXPECT_EQ(NormalizeAnswer("An  apple, a PEAR."), "apple pear");
}

TEST(Metrics, PerQuestionScores) {
  const std::vector<std::string> gold = {"by the mount options"};
  EXPECT_EQ(ExactMatch("by the mount options", gold), 1.0);
  EXPECT_EQ(F1Score("by the mount options", gold), 1.0);
  EXPECT_EQ(ExactMatch("the mount options", gold), 0.0);
  EXPECT_NEAR(F1Score("the mount options", gold), 0.8, 1e-15);
  EXPECT_EQ(ExactMatch("", {}), 1.0);
  EXPECT_EQ(F1Score("", {}), 1.0);
  EXPECT_EQ(F1Score("samba", {}), 0.0);
  EXPECT_EQ(F1Score("", gold), 0.0);
  const std::vector<std::string> two = {"samba share", "a network drive"};
  EXPECT_EQ(ExactMatch("network drive", two), 1.0);
  EXPECT_NEAR(F1Score("samba", two), 2.0 / 3.0, 1e-15);
}

TEST(Metrics, HandScoredFixture) {
  const std::vector<Dialogue> corpus = LoadCorpus(testing::DataPath("metrics_fixture.json"));
  const Predictions predictions =
      PredictionsFromJson(ReadFile(testing::DataPath("metrics_predictions.json")));
  const EvalReport r = ScorePredictions(corpus, predictions);
  // EM: 1 + 0 + 1; F1: 1 + 0.8 + 1.
  EXPECT_NEAR(r.em, 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.f1, 280.0 / 3.0, 1e-12);
  EXPECT_EQ(r.num_answerable, 2);
  EXPECT_EQ(r.num_unanswerable, 1);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_NEAR(r.records[1].f1, 0.8, 1e-15);
  EXPECT_EQ(r.Summary(), "EM 66.7 F1 93.3 (answerable 2, unanswerable 1)");
  EXPECT_FALSE(r.undefined);
}

TEST(Metrics, MissingPredictionCountsAsEmpty) {
  const std::vector<Dialogue> corpus = LoadCorpus(testing::DataPath("metrics_fixture.json"));
  const EvalReport r = ScorePredictions(corpus, {});
  EXPECT_NEAR(r.em, 100.0 / 3.0, 1e-12);  // only the unanswerable question
}

TEST(Metrics, EmptyCorpusIsUndefined) {
  const EvalReport r = ScorePredictions({}, {});
  EXPECT_TRUE(r.undefined);
  EXPECT_EQ(r.em, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(r.num_answerable + r.num_unanswerable, 0);
}

TEST(Metrics, BoundsOnRandomStrings) {
  std::mt19937_64 rng(4);
  const std::vector<std::string> words = {"the", "mount", "options", "by", "samba", "a", "Linux!"};
  auto phrase = [&] {
    std::string s;
    const std::size_t n = rng() % 5;
    for (std::size_t i = 0; i < n; ++i) s += words[rng() % words.size()] + " ";
    return s;
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> golds;
    const std::size_t num_golds = rng() % 3;
    for (std::size_t g = 0; g < num_golds; ++g) golds.push_back(phrase());
    const std::string pred = phrase();
    const Real em = ExactMatch(pred, golds), f1 = F1Score(pred, golds);
    EXPECT_LE(0.0, em);
    EXPECT_LE(em, f1);
    EXPECT_LE(f1, 1.0);
  }
}

TEST(Metrics, PredictionsJsonRoundTrip) {
  const Predictions p = {{"a", "by the mount options"}, {"b", ""}};
  EXPECT_EQ(PredictionsFromJson(PredictionsToJson(p)), p);
  EXPECT_THROW(PredictionsFromJson("{\"a\": "), ParseError);
  EXPECT_THROW(PredictionsFromJson("{\"a\": 3}"), SchemaError);
}

// ---- config

TEST(Config, TextRoundTrip) {
  TrainConfig c;
  c.learning_rate = 5e-5;
  c.encoder.hidden = 32;
  c.ablation.use_discourse_graph = false;
  c.null_threshold = -0.25;
  EXPECT_EQ(TrainConfig::FromText(c.ToText()), c);
  EXPECT_EQ(TrainConfig::Keys().size(), 25u);
}

TEST(Config, Errors) {
  TrainConfig c;
  EXPECT_THROW(c.Set("hiden", "3"), ConfigError);
  EXPECT_THROW(c.Set("hidden", "three"), ConfigError);
  EXPECT_THROW(TrainConfig::FromText("batch_size = 0").Validate(), ConfigError);
  EXPECT_THROW(TrainConfig::FromText("precision = 32").Validate(), ConfigError);
  EXPECT_THROW(TrainConfig::FromText("hidden = 30\nheads = 4").Validate(), ConfigError);
}

TEST(Config, PresetsAndShippedFiles) {
  EXPECT_EQ(kLearningRatePresets[0], 3e-5);
  EXPECT_EQ(kLearningRatePresets[1], 5e-5);
  EXPECT_EQ(kLearningRatePresets[2], 4e-6);
  const std::string configs = std::string(SPKMRC_TEST_DATA) + "/../../configs/";
  const TrainConfig molweni = TrainConfig::FromFile(configs + "molweni.cfg");
  EXPECT_EQ(molweni.learning_rate, 3e-5);
  EXPECT_EQ(molweni.encoder.max_len, 348);
  EXPECT_EQ(TrainConfig::FromFile(configs + "synth.cfg").encoder.hidden, 64);
  EXPECT_EQ(TrainConfig::FromFile(configs + "gradcheck.cfg").encoder.hidden, 16);
}

// ---- ablation accounting

TEST(Ablation, ParameterCountDropsByModuleAndSpanColumns) {
  constexpr int kD = 16;
  ModelConfig full;
  full.encoder.vocab_size = 50;
  full.encoder.hidden = kD;
  full.encoder.heads = 2;
  full.encoder.layers = 1;
  full.encoder.ffn = 32;
  full.encoder.max_len = 40;
  full.graph_layers = 2;
  full.num_relation_labels = 3;
  const SpeakerMrcModel model(full, 1);
  const std::size_t total = model.params().TotalCount();
  EXPECT_EQ(total, ExpectedParamCount(full));

  // Hand formulas: two channels of Wq, Wk, Wv, Wo plus fusion; R-GCN with
  // (types + 1) D x D matrices and a bias per layer plus embeddings.
  const std::size_t d = kD;
  const std::size_t masking = 2 * 4 * d * d + 2 * (4 * d * d + d) + (2 * d * d + d);
  const std::size_t speaker_graph = 2 * (3 * d * d + d) + d;
  const std::size_t discourse_graph = 2 * (6 * d * d + d) + d + 3 * d;

  struct Case {
    const char* prefix;
    std::size_t own;
    bool AblationConfig::*flag;
  };
  for (const Case& c : {Case{"speaker_attn.", masking, &AblationConfig::use_speaker_masking},
                        Case{"speaker_graph.", speaker_graph, &AblationConfig::use_speaker_graph},
                        Case{"discourse_graph.", discourse_graph,
                             &AblationConfig::use_discourse_graph}}) {
    EXPECT_EQ(model.params().CountWithPrefix(c.prefix), c.own) << c.prefix;
    ModelConfig ablated = full;
    ablated.ablation.*c.flag = false;
    const SpeakerMrcModel small(ablated, 1);
    EXPECT_EQ(total - small.params().TotalCount(), c.own + 2 * d) << c.prefix;
    EXPECT_EQ(small.params().CountWithPrefix(c.prefix), 0u);
  }
}

// ---- training, checkpoints

TrainConfig SmallConfig() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.batch_size = 2;
  c.max_steps = 12;
  c.encoder.hidden = 16;
  c.encoder.heads = 2;
  c.encoder.layers = 1;
  c.encoder.ffn = 32;
  c.encoder.max_len = 96;
  c.encoder.dropout = 0.0;
  return c;
}

std::vector<Dialogue> SmallCorpus() {
  SynthOptions options;
  options.num_dialogues = 2;
  return GenerateSyntheticCorpus(options);
}

TEST(Training, ZeroLearningRateFullBatchGivesConstantLoss) {
  const std::vector<Dialogue> corpus = SmallCorpus();
  TrainConfig c = SmallConfig();
  c.learning_rate = 0.0;
  c.batch_size = 6;  // every question
  c.max_steps = 4;
  const TrainResult r = Train(corpus, c);
  ASSERT_EQ(r.loss_log.size(), 4u);
  for (const LossRecord& l : r.loss_log) EXPECT_EQ(l.mean_loss, r.loss_log[0].mean_loss);
}

TEST(Training, SameSeedIsBitIdentical) {
  const std::vector<Dialogue> corpus = SmallCorpus();
  TrainConfig c = SmallConfig();
  c.encoder.dropout = 0.1;
  const TrainResult a = Train(corpus, c);
  const TrainResult b = Train(corpus, c);
  EXPECT_EQ(LossLogToCsv(a.loss_log), LossLogToCsv(b.loss_log));
  EXPECT_EQ(a.checkpoint, b.checkpoint);
  c.seed = 2;
  EXPECT_NE(Train(corpus, c).loss_log, a.loss_log);
}

TEST(Training, LossDecreasesAndStaysFinite) {
  const std::vector<Dialogue> corpus = SmallCorpus();
  TrainConfig c = SmallConfig();
  c.max_steps = 40;
  const TrainResult r = Train(corpus, c);
  ASSERT_EQ(r.steps, 40);
  Real first = 0.0, last = 0.0;
  for (int i = 0; i < 5; ++i) {
    first += r.loss_log[static_cast<std::size_t>(i)].mean_loss;
    last += r.loss_log[r.loss_log.size() - 1 - static_cast<std::size_t>(i)].mean_loss;
  }
  for (const LossRecord& l : r.loss_log) EXPECT_TRUE(std::isfinite(l.mean_loss));
  EXPECT_LT(last, first);
}

TEST(Training, WritesOutputsAndMaxEpochs) {
  const std::vector<Dialogue> corpus = SmallCorpus();
  const fs::path dir = ScratchDir("outputs");
  TrainConfig c = SmallConfig();
  c.max_epochs = 1;  // 6 questions / batch 2
  c.checkpoint_every = 2;
  const TrainResult r = Train(corpus, c, {dir, nullptr});
  EXPECT_EQ(r.steps, 3);
  EXPECT_TRUE(fs::exists(dir / "checkpoint.bin"));
  EXPECT_TRUE(fs::exists(dir / "step-2.bin"));
  EXPECT_EQ(ReadFile(dir / "loss_log.csv"), LossLogToCsv(r.loss_log));
  EXPECT_EQ(TrainConfig::FromFile(dir / "config.txt"), c);
  EXPECT_EQ(LossLogToCsv(r.loss_log).substr(0, 15), "step,mean_loss\n");
}

TEST(Checkpoint, RoundTripReproducesEvaluation) {
  const std::vector<Dialogue> corpus = SmallCorpus();
  const TrainResult r = Train(corpus, SmallConfig());
  const fs::path path = ScratchDir("roundtrip") / "model.bin";
  SaveCheckpoint(r.checkpoint, path);
  const Checkpoint loaded = LoadCheckpoint(path);
  EXPECT_EQ(loaded, r.checkpoint);
  const Evaluation a = Evaluate(r.checkpoint, corpus);
  const Evaluation b = Evaluate(loaded, corpus);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.predictions, b.predictions);
  const SpeakerMrcModel model = RestoreModel(loaded);
  EXPECT_EQ(model.params().TotalCount(),
            ExpectedParamCount(loaded.config.ToModelConfig(
                static_cast<int>(loaded.vocab.size()),
                std::max(1, static_cast<int>(loaded.vocab.num_relations())))));
}

TEST(Checkpoint, RejectsDamagedFiles) {
  const TrainResult r = Train(SmallCorpus(), SmallConfig());
  const fs::path dir = ScratchDir("damaged");
  SaveCheckpoint(r.checkpoint, dir / "good.bin");
  const std::string bytes = ReadFile(dir / "good.bin");
  WriteFile(dir / "truncated.bin", bytes.substr(0, bytes.size() - 9));
  WriteFile(dir / "trailing.bin", bytes + "x");
  WriteFile(dir / "magic.bin", "XPKMRC" + bytes.substr(6));
  for (const char* name : {"truncated.bin", "trailing.bin", "magic.bin", "missing.bin"}) {
    EXPECT_THROW(LoadCheckpoint(dir / name), CheckpointError) << name;
  }
  Checkpoint renamed = r.checkpoint;
  renamed.params[0].name = "encoder.other";
  EXPECT_THROW(RestoreModel(renamed), CheckpointError);
}

// ---- command line

int RunCli(const std::string& args) {
  const std::string command = std::string(SPKMRC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = ScratchDir("cli");
  const std::string vfat = testing::DataPath("vfat.json");
  EXPECT_EQ(RunCli("inspect-graph --corpus " + vfat + " --dialogue vfat --kind speaker"), 0);
  EXPECT_EQ(RunCli("inspect-graph --corpus " + vfat + " --dialogue nope --kind speaker"), 2);
  EXPECT_EQ(RunCli("inspect-graph --corpus " + vfat + " --dialogue vfat --kind other"), 1);
  EXPECT_EQ(RunCli("no-such-command"), 1);
  WriteFile(dir / "bad.json", "{\"dialogues\": [");
  EXPECT_EQ(RunCli("inspect-graph --corpus " + (dir / "bad.json").string() +
                   " --dialogue vfat --kind speaker"),
            2);
  EXPECT_EQ(RunCli("gen-synth --out " + (dir / "synth.json").string() + " --dialogues 3 --seed 2"),
            0);
  EXPECT_EQ(LoadCorpus(dir / "synth.json").size(), 3u);
  WriteFile(dir / "small.cfg", SmallConfig().ToText() + "max_steps = 2\n");
  EXPECT_EQ(RunCli("train --corpus " + (dir / "synth.json").string() + " --config " +
                   (dir / "small.cfg").string() + " --out " + (dir / "run").string()),
            0);
  EXPECT_EQ(RunCli("eval --checkpoint " + (dir / "run" / "checkpoint.bin").string() +
                   " --corpus " + (dir / "synth.json").string() + " --out " +
                   (dir / "pred.json").string()),
            0);
  EXPECT_EQ(PredictionsFromJson(ReadFile(dir / "pred.json")).size(), 9u);
  WriteFile(dir / "junk.bin", "junk");
  EXPECT_EQ(RunCli("eval --checkpoint " + (dir / "junk.bin").string() + " --corpus " +
                   (dir / "synth.json").string() + " --out " + (dir / "p2.json").string()),
            2);
  WriteFile(dir / "nan.cfg", SmallConfig().ToText() + "learning_rate = 1e300\nmax_steps = 3\n");
  EXPECT_EQ(RunCli("train --corpus " + (dir / "synth.json").string() + " --config " +
                   (dir / "nan.cfg").string() + " --out " + (dir / "nan").string()),
            3);
}

}  // namespace
}  // namespace spkmrc
