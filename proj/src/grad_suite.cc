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

#include "spkmrc/grad_suite.h"

#include <chrono>
#include <optional>
#include <random>

#include "spkmrc/encoder.h"
#include "spkmrc/errors.h"
#include "spkmrc/model.h"
#include "spkmrc/params.h"
#include "spkmrc/relational_graphs.h"
#include "spkmrc/span_model.h"
#include "spkmrc/speaker_attention.h"

namespace spkmrc {
namespace {

constexpr Real kModuleTolerance = 1e-6;
constexpr Real kModelTolerance = 1e-4;

Tensor RandomTensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<Real> normal(0.0, 1.0);
  Tensor t(rows, cols);
  for (Real& v : t.data()) v = normal(rng);
  return t;
}

Parameter& RandomInput(ModelParams& params, std::size_t rows, std::size_t cols,
                       std::mt19937_64& rng) {
  return params.AddNormal("input", rows, cols, 1.0, rng);
}

}  // namespace

Dialogue GradCheckDialogue() {
  Dialogue d;
  d.id = "gradcheck";
  d.utterances = {{0, "alice", "my printer is broken", false},
                  {1, "bob", "did you try a reboot ?", false}};
  d.relations = {{0, 1, "Question-answer_pair"}};
  Question q;
  q.id = "gradcheck_q0";
  q.text = "what is broken ?";
  q.answerable = true;
  const RenderedContext ctx = RenderContext(d);
  q.answers.push_back({"printer", static_cast<int>(ctx.text.find("printer"))});
  d.questions.push_back(q);
  return d;
}

const std::vector<std::string>& GradCheckModules() {
  static const std::vector<std::string> modules = {
      "encoder", "speaker_attention", "speaker_graph", "discourse_graph", "span_model", "model"};
  return modules;
}

ModuleGradCheck RunModuleGradCheck(const std::string& module, const TrainConfig& config,
                                   const GradCheckOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dialogue d = GradCheckDialogue();
  const std::vector<Dialogue> corpus = {d};
  const Vocabulary vocab = BuildVocabulary(corpus);
  const ModelConfig mc =
      config.ToModelConfig(static_cast<int>(vocab.size()), static_cast<int>(vocab.num_relations()));
  const PreparedExample prepared =
      Prepare(EncodeExample(d, d.questions[0], vocab, mc.encoder.max_len));
  const EncodedExample& e = prepared.example;
  const std::size_t length = e.token_ids.size();
  const std::size_t hidden = static_cast<std::size_t>(mc.encoder.hidden);
  const Real std_dev = mc.encoder.init_std;

  std::mt19937_64 rng(config.seed);
  ModuleGradCheck out;
  out.module = module;
  out.tolerance = kModuleTolerance;

  ModelParams params;
  LossFn loss;
  // Keeps module parameter handles alive for the closures.
  std::optional<SpeakerMrcModel> model;
  EncoderParams enc;
  SpeakerAttentionParams attn;
  RgcnParams rgcn;
  SpanParams span;
  Parameter* input = nullptr;
  Tensor readout;

  if (module == "encoder") {
    enc = MakeEncoderParams(params, mc.encoder, rng);
    readout = RandomTensor(length, hidden, rng);
    loss = [&](Tape& tape) {
      return weighted_sum(Encode(tape, e, enc, mc.encoder, PadKeyMask(e)), readout);
    };
  } else if (module == "speaker_attention") {
    input = &RandomInput(params, length, hidden, rng);
    attn = MakeSpeakerAttentionParams(params, mc.encoder.hidden, mc.encoder.heads, std_dev, rng);
    readout = RandomTensor(length, hidden, rng);
    const SpeakerMasks masks = BuildMasks(e);
    loss = [&, masks](Tape& tape) {
      return weighted_sum(SpeakerAttention(tape.Param(*input), masks, attn).fused, readout);
    };
  } else if (module == "speaker_graph" || module == "discourse_graph") {
    const bool speaker = module == "speaker_graph";
    const HeteroGraph& g = speaker ? prepared.speaker_graph : prepared.discourse_graph;
    input = &RandomInput(params, length, hidden, rng);
    rgcn = MakeRgcnParams(params, module, g.edge_types, mc.encoder.hidden, mc.graph_layers,
                          speaker ? 0 : mc.num_relation_labels, std_dev, rng);
    readout = RandomTensor(length, hidden, rng);
    loss = [&, speaker](Tape& tape) {
      const HeteroGraph& graph = speaker ? prepared.speaker_graph : prepared.discourse_graph;
      const GraphOutput go = RunGraph(graph, tape.Param(*input), e, rgcn);
      return weighted_sum(BroadcastToTokens(go, graph, e), readout);
    };
  } else if (module == "span_model") {
    const int width = mc.ablation.num_blocks() * mc.encoder.hidden;
    input = &RandomInput(params, length, static_cast<std::size_t>(width), rng);
    span = MakeSpanParams(params, width, std_dev, rng);
    loss = [&](Tape& tape) {
      return SpanLoss(ComputeSpanLogits(tape.Param(*input), PadLogitMask(e), span), e.gold_start,
                      e.gold_end);
    };
  } else if (module == "model") {
    out.tolerance = kModelTolerance;
    model.emplace(mc, config.seed);
    loss = [&](Tape& tape) { return model->Forward(tape, prepared).loss; };
  } else {
    throw ConfigError("unknown grad-check module '" + module + "'");
  }

  out.result = model ? GradCheck(loss, model->params(), options) : GradCheck(loss, params, options);
  out.passed = out.result.max_rel_error < out.tolerance;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace spkmrc
