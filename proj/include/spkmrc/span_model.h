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

// Fusion of the speaker-aware blocks and extractive span prediction.

#ifndef SPKMRC_SPAN_MODEL_H_
#define SPKMRC_SPAN_MODEL_H_

#include <optional>
#include <random>
#include <span>
#include <string>

#include "spkmrc/autodiff.h"
#include "spkmrc/corpus.h"
#include "spkmrc/params.h"

namespace spkmrc {

struct AblationConfig {
  bool use_speaker_masking = true;
  bool use_speaker_graph = true;
  bool use_discourse_graph = true;

  // Column blocks of P, H included.
  int num_blocks() const {
    return 1 + int{use_speaker_masking} + int{use_speaker_graph} + int{use_discourse_graph};
  }
  bool operator==(const AblationConfig&) const = default;
};

// P = [H_C | H_S | H_G | H] with disabled blocks left out.
struct FusedRepr {
  Var p;
  int blocks = 1;
};

// Throws ConfigMismatch when a block's presence disagrees with the ablation
// flags, ShapeError when the blocks differ in shape.
FusedRepr Fuse(const std::optional<Var>& h_c, const std::optional<Var>& h_s,
               const std::optional<Var>& h_g, const Var& h, const AblationConfig& ablation);

struct SpanParams {
  Parameter* w = nullptr;  // (blocks * D) x 2
  Parameter* b = nullptr;  // 1 x 2
};

SpanParams MakeSpanParams(ModelParams& params, int input_width, Real init_std,
                          std::mt19937_64& rng);

struct SpanLogits {
  Var start;  // 1 x L
  Var end;    // 1 x L
};

// 1 x L row holding 0 on real tokens and -kLarge on padding.
Tensor PadLogitMask(const EncodedExample& example);

// One dense layer maps every row of P to (start, end) scores; padding gets
// -kLarge added.
SpanLogits ComputeSpanLogits(const Var& p, const Tensor& pad_logit_mask,
                             const SpanParams& params);

// (CE(start, gold_start) + CE(end, gold_end)) / 2. Unanswerable examples use
// position 0 ([CLS]) for both. Throws IndexError on an out-of-range gold.
Var SpanLoss(const SpanLogits& logits, int gold_start, int gold_end);

struct DecodedAnswer {
  bool no_answer = true;
  std::string text;  // empty for no answer
  Real score = 0.0;  // winning score (span or null)
  int start = 0;
  int end = 0;
  Real null_score = 0.0;
  Real best_span_score = 0.0;
  bool has_span = false;
};

// Best pair s <= t, t - s < max_answer_len, both context text tokens, by
// start[s] + end[t]; the null score is start[0] + end[0]. Answers "no answer"
// iff null - best >= null_threshold or no valid pair exists.
DecodedAnswer DecodeAnswer(std::span<const Real> start, std::span<const Real> end,
                           const EncodedExample& example, int max_answer_len = 30,
                           Real null_threshold = 0.0);

}  // namespace spkmrc

#endif  // SPKMRC_SPAN_MODEL_H_
