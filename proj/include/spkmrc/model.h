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

// The full speaker-aware reading-comprehension model: encoder, speaker
// masking channels, speaker and discourse graphs, fusion and span head.

#ifndef SPKMRC_MODEL_H_
#define SPKMRC_MODEL_H_

#include <cstdint>
#include <optional>
#include <random>

#include "spkmrc/corpus.h"
#include "spkmrc/encoder.h"
#include "spkmrc/params.h"
#include "spkmrc/relational_graphs.h"
#include "spkmrc/span_model.h"
#include "spkmrc/speaker_attention.h"

namespace spkmrc {

struct ModelConfig {
  EncoderConfig encoder;
  AblationConfig ablation;
  int graph_layers = 2;
  // Rows of the discourse graph's relation embedding table.
  int num_relation_labels = 1;
};

// An encoded example with its graphs built once.
struct PreparedExample {
  EncodedExample example;
  HeteroGraph speaker_graph;
  HeteroGraph discourse_graph;
};

PreparedExample Prepare(EncodedExample example);

// Parameter count implied by a configuration.
std::size_t ExpectedParamCount(const ModelConfig& config);

class SpeakerMrcModel {
 public:
  // Parameters are registered in a fixed order (encoder, speaker attention,
  // speaker graph, discourse graph, span head) and initialized from `seed`.
  SpeakerMrcModel(const ModelConfig& config, std::uint64_t seed);

  struct Output {
    Var h;
    std::optional<Var> h_c;
    std::optional<Var> h_s;
    std::optional<Var> h_g;
    FusedRepr fused;
    SpanLogits logits;
    Var loss;
  };

  // A null dropout_rng runs in evaluation mode.
  Output Forward(Tape& tape, const PreparedExample& prepared,
                 std::mt19937_64* dropout_rng = nullptr) const;

  DecodedAnswer Predict(const PreparedExample& prepared, int max_answer_len,
                        Real null_threshold) const;

  const ModelConfig& config() const { return config_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

 private:
  ModelConfig config_;
  ModelParams params_;
  EncoderParams encoder_;
  std::optional<SpeakerAttentionParams> speaker_attention_;
  std::optional<RgcnParams> speaker_graph_;
  std::optional<RgcnParams> discourse_graph_;
  SpanParams span_;
};

}  // namespace spkmrc

#endif  // SPKMRC_MODEL_H_
