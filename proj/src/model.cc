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

#include "spkmrc/model.h"

#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

const std::vector<std::string>& SpeakerEdgeTypes() {
  static const std::vector<std::string> types = {"SAME_SPEAKER", "GLOBAL_OUT"};
  return types;
}

const std::vector<std::string>& DiscourseEdgeTypes() {
  static const std::vector<std::string> types = {"SRC_TO_REL", "REL_TO_TGT", "REL_TO_SRC",
                                                 "TGT_TO_REL", "GLOBAL_OUT"};
  return types;
}

}  // namespace

PreparedExample Prepare(EncodedExample example) {
  PreparedExample p;
  p.speaker_graph = BuildSpeakerGraph(example);
  p.discourse_graph = BuildDiscourseGraph(example);
  p.example = std::move(example);
  return p;
}

std::size_t ExpectedParamCount(const ModelConfig& c) {
  const int d = c.encoder.hidden;
  std::size_t total = EncoderParamCount(c.encoder);
  if (c.ablation.use_speaker_masking) total += SpeakerAttentionParamCount(d);
  if (c.ablation.use_speaker_graph) {
    total += RgcnParamCount(speaker_edge::kCount, d, c.graph_layers, 0);
  }
  if (c.ablation.use_discourse_graph) {
    total += RgcnParamCount(discourse_edge::kCount, d, c.graph_layers, c.num_relation_labels);
  }
  total += static_cast<std::size_t>(c.ablation.num_blocks() * d) * 2 + 2;
  return total;
}

SpeakerMrcModel::SpeakerMrcModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.encoder.Validate();
  if (config_.graph_layers < 0) throw ConfigError("graph_layers must be non-negative");
  if (config_.num_relation_labels < 1) {
    throw ConfigError("num_relation_labels must be at least 1");
  }
  std::mt19937_64 rng(seed);
  const int d = config_.encoder.hidden;
  const Real s = config_.encoder.init_std;
  encoder_ = MakeEncoderParams(params_, config_.encoder, rng);
  if (config_.ablation.use_speaker_masking) {
    speaker_attention_ = MakeSpeakerAttentionParams(params_, d, config_.encoder.heads, s, rng);
  }
  if (config_.ablation.use_speaker_graph) {
    speaker_graph_ = MakeRgcnParams(params_, "speaker_graph", SpeakerEdgeTypes(), d,
                                    config_.graph_layers, 0, s, rng);
  }
  if (config_.ablation.use_discourse_graph) {
    discourse_graph_ = MakeRgcnParams(params_, "discourse_graph", DiscourseEdgeTypes(), d,
                                      config_.graph_layers, config_.num_relation_labels, s, rng);
  }
  span_ = MakeSpanParams(params_, config_.ablation.num_blocks() * d, s, rng);
}

SpeakerMrcModel::Output SpeakerMrcModel::Forward(Tape& tape, const PreparedExample& prepared,
                                                 std::mt19937_64* dropout_rng) const {
  const EncodedExample& e = prepared.example;
  Output out;
  out.h = Encode(tape, e, encoder_, config_.encoder, PadKeyMask(e), dropout_rng);
  if (speaker_attention_) {
    out.h_c = SpeakerAttention(out.h, BuildMasks(e), *speaker_attention_).fused;
  }
  if (speaker_graph_) {
    const GraphOutput g = RunGraph(prepared.speaker_graph, out.h, e, *speaker_graph_);
    out.h_s = BroadcastToTokens(g, prepared.speaker_graph, e);
  }
  if (discourse_graph_) {
    const GraphOutput g = RunGraph(prepared.discourse_graph, out.h, e, *discourse_graph_);
    out.h_g = BroadcastToTokens(g, prepared.discourse_graph, e);
  }
  out.fused = Fuse(out.h_c, out.h_s, out.h_g, out.h, config_.ablation);
  out.logits = ComputeSpanLogits(out.fused.p, PadLogitMask(e), span_);
  out.loss = SpanLoss(out.logits, e.gold_start, e.gold_end);
  return out;
}

DecodedAnswer SpeakerMrcModel::Predict(const PreparedExample& prepared, int max_answer_len,
                                       Real null_threshold) const {
  Tape tape;
  const Output out = Forward(tape, prepared);
  return DecodeAnswer(out.logits.start.value().data(), out.logits.end.value().data(),
                      prepared.example, max_answer_len, null_threshold);
}

}  // namespace spkmrc
