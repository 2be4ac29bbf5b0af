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

// Speaker-aware masked multi-head self-attention.
//
// Two additive masks split every real-speaker token pair into a same-speaker
// channel (M1) and a different-speaker channel (M2). Each channel is a
// multi-head attention over the encoder output H; a learned sigmoid gate then
// blends the two channels into H_C.

#ifndef SPKMRC_SPEAKER_ATTENTION_H_
#define SPKMRC_SPEAKER_ATTENTION_H_

#include <random>
#include <string>
#include <vector>

#include "spkmrc/autodiff.h"
#include "spkmrc/corpus.h"
#include "spkmrc/params.h"

namespace spkmrc {

// Per-head projections W_t^Q, W_t^K, W_t^V (hidden x hidden/heads each) and
// the output projection W^O (hidden x hidden). No biases.
struct AttentionParams {
  std::vector<Parameter*> wq;
  std::vector<Parameter*> wk;
  std::vector<Parameter*> wv;
  Parameter* wo = nullptr;

  int heads() const { return static_cast<int>(wq.size()); }
};

AttentionParams MakeAttentionParams(ModelParams& params, const std::string& prefix,
                                    int hidden, int heads, Real init_std,
                                    std::mt19937_64& rng);

// E1 = ReLU([H, C1, H - C1, H .* C1] W_e1 + b_e1), E2 likewise with C2,
// G = sigmoid([E1, E2] W_g + b_g).
struct FusionParams {
  Parameter* e1_w = nullptr;  // 4D x D
  Parameter* e1_b = nullptr;
  Parameter* e2_w = nullptr;  // 4D x D
  Parameter* e2_b = nullptr;
  Parameter* gate_w = nullptr;  // 2D x D
  Parameter* gate_b = nullptr;
};

struct SpeakerAttentionParams {
  AttentionParams channel1;  // same speaker
  AttentionParams channel2;  // different speaker
  FusionParams fusion;
};

SpeakerAttentionParams MakeSpeakerAttentionParams(ModelParams& params, int hidden,
                                                  int heads, Real init_std,
                                                  std::mt19937_64& rng);
// Scalar count registered by MakeSpeakerAttentionParams.
std::size_t SpeakerAttentionParamCount(int hidden);

// L x L additive masks with entries in {0, -kLarge}. Row = query, col = key.
struct SpeakerMasks {
  Tensor same;       // M1
  Tensor different;  // M2
};

// M1[i,j] = 0 iff both carry a speaker and it is the same; M2[i,j] = 0 iff
// both carry a speaker and they differ. Tokens without a speaker (CLS,
// question, padding) see every non-pad key as queries, and are visible to
// every query as keys. Pad keys are always blocked. A real-speaker row that
// allows no real-speaker key gets its diagonal unblocked.
SpeakerMasks BuildMasks(const EncodedExample& example);

// Mask allowing every non-pad key for every query.
Tensor PadKeyMask(const EncodedExample& example);

// softmax(Q K^T / sqrt(d_k) + M) V per head, heads concatenated and projected
// by W^O. When `weights` is non-null it receives each head's attention matrix.
Var MaskedMhsa(const Var& h, const Tensor& mask, const AttentionParams& p,
               std::vector<Tensor>* weights = nullptr);

// H_C = G .* C1 + (1 - G) .* C2.
Var GatedFusion(const Var& h, const Var& c1, const Var& c2, const FusionParams& p);

struct SpeakerAttentionOutput {
  Var channel1;
  Var channel2;
  Var fused;
};

SpeakerAttentionOutput SpeakerAttention(const Var& h, const SpeakerMasks& masks,
                                        const SpeakerAttentionParams& p);

}  // namespace spkmrc

#endif  // SPKMRC_SPEAKER_ATTENTION_H_
