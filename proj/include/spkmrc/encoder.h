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

// A small post-layer-norm transformer encoder producing the contextual
// token representation H (L x hidden).

#ifndef SPKMRC_ENCODER_H_
#define SPKMRC_ENCODER_H_

#include <cstddef>
#include <random>
#include <vector>

#include "spkmrc/autodiff.h"
#include "spkmrc/corpus.h"
#include "spkmrc/params.h"
#include "spkmrc/speaker_attention.h"

namespace spkmrc {

struct EncoderConfig {
  int hidden = 64;
  int heads = 4;
  int layers = 2;
  int ffn = 256;
  int max_len = kDefaultMaxLen;
  int vocab_size = 0;
  Real dropout = 0.1;
  // Standard deviation of the normal initializer for weights and embeddings.
  Real init_std = 0.02;

  // Throws ConfigError.
  void Validate() const;
};

struct EncoderLayerParams {
  AttentionParams attention;
  Parameter* ln1_gamma = nullptr;
  Parameter* ln1_beta = nullptr;
  Parameter* ffn_w1 = nullptr;  // hidden x ffn
  Parameter* ffn_b1 = nullptr;
  Parameter* ffn_w2 = nullptr;  // ffn x hidden
  Parameter* ffn_b2 = nullptr;
  Parameter* ln2_gamma = nullptr;
  Parameter* ln2_beta = nullptr;
};

struct EncoderParams {
  Parameter* token_embedding = nullptr;     // vocab x hidden
  Parameter* position_embedding = nullptr;  // max_len x hidden
  Parameter* segment_embedding = nullptr;   // 2 x hidden
  Parameter* embed_ln_gamma = nullptr;
  Parameter* embed_ln_beta = nullptr;
  std::vector<EncoderLayerParams> layers;
};

EncoderParams MakeEncoderParams(ModelParams& params, const EncoderConfig& config,
                                std::mt19937_64& rng);

// (vocab + max_len + 2) D + 2 D + layers (4 D^2 + 2 D F + F + 5 D)
std::size_t EncoderParamCount(const EncoderConfig& config);

// Token + position + segment embeddings followed by layer norm. Throws
// IndexError on an out-of-range token id or an over-long example.
Var Embed(Tape& tape, const EncodedExample& example, const EncoderParams& p);

// `pad_mask` is PadKeyMask(example). A null dropout_rng disables dropout.
Var Encode(Tape& tape, const EncodedExample& example, const EncoderParams& p,
           const EncoderConfig& config, const Tensor& pad_mask,
           std::mt19937_64* dropout_rng = nullptr);

}  // namespace spkmrc

#endif  // SPKMRC_ENCODER_H_
