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

// Command-line entry point: training, evaluation, prediction, inspection and
// gradient checks.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spkmrc/checkpoint.h"
#include "spkmrc/config.h"
#include "spkmrc/corpus.h"
#include "spkmrc/errors.h"
#include "spkmrc/grad_suite.h"
#include "spkmrc/metrics.h"
#include "spkmrc/model.h"
#include "spkmrc/relational_graphs.h"
#include "spkmrc/speaker_attention.h"
#include "spkmrc/synth.h"
#include "spkmrc/trainer.h"

namespace spkmrc {
namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Every config key as a --key flag applied on top of the config file.
struct ConfigFlags {
  std::string file;
  std::optional<int> lr_preset;
  std::map<std::string, std::string> values;

  void Register(CLI::App* app, bool file_required) {
    auto* opt = app->add_option("--config", file, "key=value config file");
    if (file_required) opt->required();
    opt->check(CLI::ExistingFile);
    app->add_option("--lr-preset", lr_preset, "learning rate preset: 0=3e-5 1=5e-5 2=4e-6")
        ->check(CLI::Range(0, static_cast<int>(kLearningRatePresets.size()) - 1));
    for (const std::string& key : TrainConfig::Keys()) {
      app->add_option("--" + key, values[key], "override config key " + key);
    }
  }

  TrainConfig Resolve() const {
    TrainConfig c = file.empty() ? TrainConfig{} : TrainConfig::FromFile(file);
    if (lr_preset) c.learning_rate = kLearningRatePresets[static_cast<std::size_t>(*lr_preset)];
    for (const auto& [key, value] : values) {
      if (!value.empty()) c.Set(key, value);
    }
    c.Validate();
    return c;
  }
};

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

const Dialogue& FindDialogue(const std::vector<Dialogue>& corpus, const std::string& id) {
  for (const Dialogue& d : corpus) {
    if (d.id == id) return d;
  }
  throw DataError("no dialogue with id '" + id + "'");
}

const Question& FindQuestion(const Dialogue& d, const std::string& id) {
  for (const Question& q : d.questions) {
    if (q.id == id) return q;
  }
  throw DataError("dialogue '" + d.id + "' has no question '" + id + "'");
}

std::string MaskGrid(const Tensor& mask, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out.push_back(mask(i, j) == 0.0 ? '0' : 'x');
    out.push_back('\n');
  }
  return out;
}

int RunTrain(const std::string& corpus_path, const ConfigFlags& flags, const std::string& out_dir) {
  const TrainConfig config = flags.Resolve();
  const std::vector<Dialogue> corpus = LoadCorpus(corpus_path);
  TrainOptions options;
  options.out_dir = out_dir;
  options.progress = &std::cerr;
  const TrainResult result = Train(corpus, config, options);
  const Evaluation ev = Evaluate(result.checkpoint, corpus);
  std::printf("steps %lld  final loss %.6g  %.1f s\n", static_cast<long long>(result.steps),
              result.loss_log.empty() ? 0.0 : result.loss_log.back().mean_loss, result.seconds);
  std::printf("train %s\n", ev.report.Summary().c_str());
  return 0;
}

int RunEval(const std::string& checkpoint_path, const std::string& corpus_path,
            const std::string& out_path, bool with_metrics) {
  const Checkpoint checkpoint = LoadCheckpoint(checkpoint_path);
  const std::vector<Dialogue> corpus = LoadCorpus(corpus_path);
  const Evaluation ev = Evaluate(checkpoint, corpus);
  WriteFile(out_path, PredictionsToJson(ev.predictions));
  if (with_metrics) std::printf("%s\n", ev.report.Summary().c_str());
  return 0;
}

int RunInspectGraph(const std::string& corpus_path, const std::string& dialogue_id,
                    const std::string& kind, int max_len) {
  const std::vector<Dialogue> corpus = LoadCorpus(corpus_path);
  const Dialogue& d = FindDialogue(corpus, dialogue_id);
  const Vocabulary vocab = BuildVocabulary(corpus);
  const Question placeholder;
  const Question& q = d.questions.empty() ? placeholder : d.questions.front();
  const EncodedExample e = EncodeExample(d, q, vocab, max_len);
  const HeteroGraph g = kind == "speaker" ? BuildSpeakerGraph(e) : BuildDiscourseGraph(e);
  std::fputs(g.ToText().c_str(), stdout);
  if (g.warnings > 0) std::fprintf(stderr, "warnings: %d\n", g.warnings);
  return 0;
}

int RunInspectMasks(const std::string& corpus_path, const std::string& dialogue_id,
                    const std::string& question_id, int max_len) {
  const std::vector<Dialogue> corpus = LoadCorpus(corpus_path);
  const Dialogue& d = FindDialogue(corpus, dialogue_id);
  const Vocabulary vocab = BuildVocabulary(corpus);
  const EncodedExample e = EncodeExample(d, FindQuestion(d, question_id), vocab, max_len);
  const SpeakerMasks masks = BuildMasks(e);
  const int n = e.num_real_tokens;
  std::printf("tokens:");
  for (int t = 0; t < n; ++t) {
    std::printf(" %d:%s/%d", t, vocab.TokenText(e.token_ids[static_cast<std::size_t>(t)]).c_str(),
                e.speaker_of_token[static_cast<std::size_t>(t)]);
  }
  std::printf("\nM1 (same speaker)\n%sM2 (different speaker)\n%s", MaskGrid(masks.same, n).c_str(),
              MaskGrid(masks.different, n).c_str());
  return 0;
}

int RunGradCheck(const ConfigFlags& flags, const std::string& module) {
  const TrainConfig config = flags.Resolve();
  std::vector<std::string> modules;
  if (module.empty() || module == "all") {
    modules = GradCheckModules();
  } else {
    modules = {module};
  }
  bool ok = true;
  for (const std::string& m : modules) {
    const ModuleGradCheck r = RunModuleGradCheck(m, config);
    std::printf("%-18s max_rel_error %.3e (tol %.0e, %zu coords, %.2f s) %s  worst %s[%zu] a=%.3e n=%.3e\n",
                m.c_str(), r.result.max_rel_error, r.tolerance, r.result.coords_checked, r.seconds,
                r.passed ? "PASS" : "FAIL", r.result.worst_param.c_str(), r.result.worst_index,
                r.result.worst_analytic, r.result.worst_numeric);
    ok = ok && r.passed;
  }
  return ok ? 0 : kExitNumeric;
}

int Main(int argc, char** argv) {
  CLI::App app{"speaker-aware dialogue reading comprehension"};
  app.require_subcommand(1);

  std::string corpus, out, checkpoint, dialogue, question, kind, module;
  int max_len = kDefaultMaxLen;
  int dialogues = 16;
  std::uint64_t seed = 1;

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "output directory")->required();
  train_flags.Register(train, true);

  auto* eval = app.add_subcommand("eval", "predict and score");
  auto* predict = app.add_subcommand("predict", "predict without scoring");
  for (auto* sub : {eval, predict}) {
    sub->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    sub->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "predictions JSON")->required();
  }

  auto* graph = app.add_subcommand("inspect-graph", "print a dialogue graph");
  graph->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  graph->add_option("--dialogue", dialogue)->required();
  graph->add_option("--kind", kind)->required()->check(CLI::IsMember({"speaker", "discourse"}));
  graph->add_option("--max_len", max_len);

  auto* masks = app.add_subcommand("inspect-masks", "print speaker masks as 0/x grids");
  masks->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
  masks->add_option("--dialogue", dialogue)->required();
  masks->add_option("--question", question)->required();
  masks->add_option("--max_len", max_len);

  ConfigFlags grad_flags;
  auto* grad = app.add_subcommand("grad-check", "finite-difference gradient checks");
  grad_flags.Register(grad, true);
  grad->add_option("--module", module, "module name or 'all'");

  auto* synth = app.add_subcommand("gen-synth", "write a synthetic corpus");
  synth->add_option("--out", out)->required();
  synth->add_option("--dialogues", dialogues)->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return RunTrain(corpus, train_flags, out);
    if (*eval) return RunEval(checkpoint, corpus, out, true);
    if (*predict) return RunEval(checkpoint, corpus, out, false);
    if (*graph) return RunInspectGraph(corpus, dialogue, kind, max_len);
    if (*masks) return RunInspectMasks(corpus, dialogue, question, max_len);
    if (*grad) return RunGradCheck(grad_flags, module);
    if (*synth) {
      SynthOptions options;
      options.num_dialogues = dialogues;
      options.seed = seed;
      SaveCorpus(GenerateSyntheticCorpus(options), out);
      return 0;
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace spkmrc

int main(int argc, char** argv) { return spkmrc::Main(argc, argv); }
