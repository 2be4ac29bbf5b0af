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

#include "spkmrc/speaker_attention.h"

#include <cmath>

#include "spkmrc/errors.h"

namespace spkmrc {

AttentionParams MakeAttentionParams(ModelParams& params, const std::string& prefix,
                                    int hidden, int heads, Real init_std,
                                    std::mt19937_64& rng) {
  if (heads <= 0 || hidden % heads != 0) {
    throw ConfigError("hidden size " + std::to_string(hidden) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  }
  const int dk = hidden / heads;
  AttentionParams p;
  for (int t = 0; t < heads; ++t) {
    const std::string head = prefix + ".head" + std::to_string(t);
    p.wq.push_back(&params.AddNormal(head + ".Wq", hidden, dk, init_std, rng));
    p.wk.push_back(&params.AddNormal(head + ".Wk", hidden, dk, init_std, rng));
    p.wv.push_back(&params.AddNormal(head + ".Wv", hidden, dk, init_std, rng));
  }
  p.wo = &params.AddNormal(prefix + ".Wo", hidden, hidden, init_std, rng);
  return p;
}

SpeakerAttentionParams MakeSpeakerAttentionParams(ModelParams& params, int hidden,
                                                  int heads, Real init_std,
                                                  std::mt19937_64& rng) {
  SpeakerAttentionParams p;
  p.channel1 =
      MakeAttentionParams(params, "speaker_attn.channel1", hidden, heads, init_std, rng);
  p.channel2 =
      MakeAttentionParams(params, "speaker_attn.channel2", hidden, heads, init_std, rng);
  FusionParams& f = p.fusion;
  f.e1_w = &params.AddNormal("speaker_attn.fusion.e1.W", 4 * hidden, hidden, init_std, rng);
  f.e1_b = &params.Add("speaker_attn.fusion.e1.b", 1, hidden);
  f.e2_w = &params.AddNormal("speaker_attn.fusion.e2.W", 4 * hidden, hidden, init_std, rng);
  f.e2_b = &params.Add("speaker_attn.fusion.e2.b", 1, hidden);
  f.gate_w =
      &params.AddNormal("speaker_attn.fusion.gate.W", 2 * hidden, hidden, init_std, rng);
  f.gate_b = &params.Add("speaker_attn.fusion.gate.b", 1, hidden);
  return p;
}

std::size_t SpeakerAttentionParamCount(int hidden) {
  const std::size_t d = static_cast<std::size_t>(hidden);
  const std::size_t channel = 3 * d * d + d * d;
  const std::size_t fusion = 2 * (4 * d * d + d) + (2 * d * d + d);
  return 2 * channel + fusion;
}

SpeakerMasks BuildMasks(const EncodedExample& e) {
  const std::size_t len = e.length();
  SpeakerMasks m{Tensor(len, len, -kLarge), Tensor(len, len, -kLarge)};
  for (std::size_t i = 0; i < len; ++i) {
    const int si = e.speaker_of_token[i];
    bool any_same = false;
    bool any_diff = false;
    for (std::size_t j = 0; j < len; ++j) {
      if (e.attention_pad_mask[j] == 0) continue;
      const int sj = e.speaker_of_token[j];
      if (si == kNone || sj == kNone) {
        m.same(i, j) = 0.0;
        m.different(i, j) = 0.0;
      } else if (si == sj) {
        m.same(i, j) = 0.0;
        any_same = true;
      } else {
        m.different(i, j) = 0.0;
        any_diff = true;
      }
    }
    if (si != kNone) {
      if (!any_same) m.same(i, i) = 0.0;
      if (!any_diff) m.different(i, i) = 0.0;
    }
  }
  return m;
}

Tensor PadKeyMask(const EncodedExample& e) {
  const std::size_t len = e.length();
  Tensor mask(len, len);
  for (std::size_t j = 0; j < len; ++j) {
    if (e.attention_pad_mask[j] != 0) continue;
    for (std::size_t i = 0; i < len; ++i) mask(i, j) = -kLarge;
  }
  return mask;
}

Var MaskedMhsa(const Var& h, const Tensor& mask, const AttentionParams& p,
               std::vector<Tensor>* weights) {
  Tape& tape = *h.tape();
  const std::size_t len = h.rows();
  if (mask.rows() != len || mask.cols() != len) {
    throw ShapeError("masked_mhsa: mask " + mask.ShapeString() + " does not match " +
                     std::to_string(len) + " tokens");
  }
  if (p.heads() == 0 || p.wo == nullptr) throw ShapeError("masked_mhsa: no heads");
  const std::size_t dk = p.wq[0]->value.cols();
  const Real inv_sqrt = 1.0 / std::sqrt(static_cast<Real>(dk));

  std::vector<Var> heads;
  heads.reserve(p.heads());
  if (weights != nullptr) weights->clear();
  for (int t = 0; t < p.heads(); ++t) {
    Var q = matmul(h, tape.Param(*p.wq[t]));
    Var k = matmul(h, tape.Param(*p.wk[t]));
    Var v = matmul(h, tape.Param(*p.wv[t]));
    Var scores = add_constant(scale(matmul(q, transpose(k)), inv_sqrt), mask);
    Var attn = softmax_rows(scores);
    if (weights != nullptr) weights->push_back(attn.value());
    heads.push_back(matmul(attn, v));
  }
  Var joined = heads.size() == 1 ? heads[0] : concat_cols(heads);
  return matmul(joined, tape.Param(*p.wo));
}

namespace {

Var Dense(const Var& x, Parameter& w, Parameter& b) {
  Tape& tape = *x.tape();
  return add(matmul(x, tape.Param(w)), tape.Param(b));
}

Var Comparison(const Var& h, const Var& c) {
  return concat_cols({h, c, sub(h, c), mul(h, c)});
}

}  // namespace

Var GatedFusion(const Var& h, const Var& c1, const Var& c2, const FusionParams& p) {
  if (!h.value().SameShape(c1.value()) || !h.value().SameShape(c2.value())) {
    throw ShapeError("gated_fusion: H " + h.value().ShapeString() + ", C1 " +
                     c1.value().ShapeString() + ", C2 " + c2.value().ShapeString());
  }
  Var e1 = relu(Dense(Comparison(h, c1), *p.e1_w, *p.e1_b));
  Var e2 = relu(Dense(Comparison(h, c2), *p.e2_w, *p.e2_b));
  Var gate = sigmoid(Dense(concat_cols({e1, e2}), *p.gate_w, *p.gate_b));
  // (1 - G) .* C2 = C2 - G .* C2
  return add(mul(gate, c1), sub(c2, mul(gate, c2)));
}

SpeakerAttentionOutput SpeakerAttention(const Var& h, const SpeakerMasks& masks,
                                        const SpeakerAttentionParams& p) {
  SpeakerAttentionOutput out;
  out.channel1 = MaskedMhsa(h, masks.same, p.channel1);
  out.channel2 = MaskedMhsa(h, masks.different, p.channel2);
  out.fused = GatedFusion(h, out.channel1, out.channel2, p.fusion);
  return out;
}

}  // namespace spkmrc
