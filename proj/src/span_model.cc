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

#include "spkmrc/span_model.h"

#include <vector>

#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

void CheckBlock(const char* name, const std::optional<Var>& block, bool enabled,
                const Var& h) {
  if (block.has_value() != enabled) {
    throw ConfigMismatch(std::string("fuse: ") + name + (enabled ? " is enabled but missing"
                                                                 : " is disabled but given"));
  }
  if (block && !block->value().SameShape(h.value())) {
    throw ShapeError(std::string("fuse: ") + name + " has shape " +
                     block->value().ShapeString() + ", H has " + h.value().ShapeString());
  }
}

}  // namespace

FusedRepr Fuse(const std::optional<Var>& h_c, const std::optional<Var>& h_s,
               const std::optional<Var>& h_g, const Var& h, const AblationConfig& a) {
  CheckBlock("H_C", h_c, a.use_speaker_masking, h);
  CheckBlock("H_S", h_s, a.use_speaker_graph, h);
  CheckBlock("H_G", h_g, a.use_discourse_graph, h);
  std::vector<Var> blocks;
  for (const auto* block : {&h_c, &h_s, &h_g}) {
    if (block->has_value()) blocks.push_back(**block);
  }
  blocks.push_back(h);
  FusedRepr out;
  out.blocks = static_cast<int>(blocks.size());
  out.p = blocks.size() == 1 ? h : concat_cols(blocks);
  return out;
}

SpanParams MakeSpanParams(ModelParams& params, int input_width, Real init_std,
                          std::mt19937_64& rng) {
  SpanParams p;
  p.w = &params.AddNormal("span.W", input_width, 2, init_std, rng);
  p.b = &params.Add("span.b", 1, 2);
  return p;
}

Tensor PadLogitMask(const EncodedExample& e) {
  Tensor mask(1, e.length());
  for (std::size_t t = 0; t < e.length(); ++t) {
    if (e.attention_pad_mask[t] == 0) mask[t] = -kLarge;
  }
  return mask;
}

SpanLogits ComputeSpanLogits(const Var& p, const Tensor& pad_logit_mask,
                             const SpanParams& params) {
  Tape& tape = *p.tape();
  if (p.cols() != params.w->value.rows()) {
    throw ShapeError("span_logits: P " + p.value().ShapeString() + " does not match W " +
                     params.w->value.ShapeString());
  }
  if (pad_logit_mask.rows() != 1 || pad_logit_mask.cols() != p.rows()) {
    throw ShapeError("span_logits: pad mask " + pad_logit_mask.ShapeString() + " for " +
                     std::to_string(p.rows()) + " tokens");
  }
  Var scores = transpose(add(matmul(p, tape.Param(*params.w)), tape.Param(*params.b)));
  SpanLogits out;
  out.start = add_constant(slice_rows(scores, 0, 1), pad_logit_mask);
  out.end = add_constant(slice_rows(scores, 1, 2), pad_logit_mask);
  return out;
}

Var SpanLoss(const SpanLogits& logits, int gold_start, int gold_end) {
  return scale(add(cross_entropy(logits.start, gold_start), cross_entropy(logits.end, gold_end)),
               0.5);
}

DecodedAnswer DecodeAnswer(std::span<const Real> start, std::span<const Real> end,
                           const EncodedExample& e, int max_answer_len,
                           Real null_threshold) {
  DecodedAnswer out;
  const std::size_t len = std::min({start.size(), end.size(), e.length()});
  if (len == 0) return out;
  out.null_score = start[0] + end[0];
  out.score = out.null_score;

  for (std::size_t s = 0; s < len; ++s) {
    if (!e.is_context_token(static_cast<int>(s))) continue;
    const std::size_t stop = std::min(len, s + static_cast<std::size_t>(max_answer_len));
    for (std::size_t t = s; t < stop; ++t) {
      if (!e.is_context_token(static_cast<int>(t))) continue;
      const Real score = start[s] + end[t];
      if (!out.has_span || score > out.best_span_score) {
        out.has_span = true;
        out.best_span_score = score;
        out.start = static_cast<int>(s);
        out.end = static_cast<int>(t);
      }
    }
  }
  if (!out.has_span || out.null_score - out.best_span_score >= null_threshold) {
    out.no_answer = true;
    out.text.clear();
    out.score = out.null_score;
    if (!out.has_span) out.start = out.end = 0;
    return out;
  }
  out.no_answer = false;
  out.score = out.best_span_score;
  out.text = Detokenize(e, out.start, out.end);
  return out;
}

}  // namespace spkmrc
