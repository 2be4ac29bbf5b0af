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

#include "spkmrc/encoder.h"

#include <numeric>
#include <string>

#include "spkmrc/errors.h"

namespace spkmrc {

void EncoderConfig::Validate() const {
  if (hidden <= 0 || heads <= 0 || hidden % heads != 0) {
    throw ConfigError("encoder: hidden (" + std::to_string(hidden) +
                      ") must be a positive multiple of heads (" +
                      std::to_string(heads) + ")");
  }
  if (layers < 0) throw ConfigError("encoder: layers must be non-negative");
  if (ffn <= 0) throw ConfigError("encoder: ffn must be positive");
  if (max_len < 4) throw ConfigError("encoder: max_len must be at least 4");
  if (vocab_size < 4) throw ConfigError("encoder: vocab_size must cover reserved ids");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder: dropout must be in [0, 1)");
  if (init_std <= 0.0) throw ConfigError("encoder: init_std must be positive");
}

EncoderParams MakeEncoderParams(ModelParams& params, const EncoderConfig& c,
                                std::mt19937_64& rng) {
  c.Validate();
  EncoderParams p;
  const Real s = c.init_std;
  p.token_embedding = &params.AddNormal("encoder.token_embedding", c.vocab_size, c.hidden, s, rng);
  p.position_embedding =
      &params.AddNormal("encoder.position_embedding", c.max_len, c.hidden, s, rng);
  p.segment_embedding = &params.AddNormal("encoder.segment_embedding", 2, c.hidden, s, rng);
  p.embed_ln_gamma = &params.Add("encoder.embed_ln.gamma", 1, c.hidden, 1.0);
  p.embed_ln_beta = &params.Add("encoder.embed_ln.beta", 1, c.hidden);
  for (int l = 0; l < c.layers; ++l) {
    const std::string prefix = "encoder.layer" + std::to_string(l);
    EncoderLayerParams layer;
    layer.attention = MakeAttentionParams(params, prefix + ".attn", c.hidden, c.heads, s, rng);
    layer.ln1_gamma = &params.Add(prefix + ".ln1.gamma", 1, c.hidden, 1.0);
    layer.ln1_beta = &params.Add(prefix + ".ln1.beta", 1, c.hidden);
    layer.ffn_w1 = &params.AddNormal(prefix + ".ffn.W1", c.hidden, c.ffn, s, rng);
    layer.ffn_b1 = &params.Add(prefix + ".ffn.b1", 1, c.ffn);
    layer.ffn_w2 = &params.AddNormal(prefix + ".ffn.W2", c.ffn, c.hidden, s, rng);
    layer.ffn_b2 = &params.Add(prefix + ".ffn.b2", 1, c.hidden);
    layer.ln2_gamma = &params.Add(prefix + ".ln2.gamma", 1, c.hidden, 1.0);
    layer.ln2_beta = &params.Add(prefix + ".ln2.beta", 1, c.hidden);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::size_t EncoderParamCount(const EncoderConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.hidden);
  const std::size_t f = static_cast<std::size_t>(c.ffn);
  const std::size_t embeddings =
      (static_cast<std::size_t>(c.vocab_size) + static_cast<std::size_t>(c.max_len) + 2) * d +
      2 * d;
  const std::size_t per_layer = 4 * d * d + 2 * d * f + f + 5 * d;
  return embeddings + static_cast<std::size_t>(c.layers) * per_layer;
}

Var Embed(Tape& tape, const EncodedExample& e, const EncoderParams& p) {
  const std::size_t max_len = p.position_embedding->value.rows();
  if (e.length() > max_len) {
    throw IndexError("embed: example has " + std::to_string(e.length()) +
                     " tokens but positions stop at " + std::to_string(max_len));
  }
  std::vector<int> positions(e.length());
  std::iota(positions.begin(), positions.end(), 0);
  Var tokens = embedding_lookup(tape.Param(*p.token_embedding), e.token_ids);
  Var pos = embedding_lookup(tape.Param(*p.position_embedding), positions);
  Var seg = embedding_lookup(tape.Param(*p.segment_embedding), e.segment_ids);
  return layer_norm(add(add(tokens, pos), seg), tape.Param(*p.embed_ln_gamma),
                    tape.Param(*p.embed_ln_beta));
}

Var Encode(Tape& tape, const EncodedExample& e, const EncoderParams& p,
           const EncoderConfig& config, const Tensor& pad_mask,
           std::mt19937_64* dropout_rng) {
  const Real rate = dropout_rng != nullptr ? config.dropout : 0.0;
  std::mt19937_64 unused;
  std::mt19937_64& rng = dropout_rng != nullptr ? *dropout_rng : unused;

  Var x = dropout(Embed(tape, e, p), rate, rng);
  for (const EncoderLayerParams& layer : p.layers) {
    Var attn = MaskedMhsa(x, pad_mask, layer.attention);
    x = layer_norm(add(x, dropout(attn, rate, rng)), tape.Param(*layer.ln1_gamma),
                   tape.Param(*layer.ln1_beta));
    Var hidden = relu(add(matmul(x, tape.Param(*layer.ffn_w1)), tape.Param(*layer.ffn_b1)));
    Var ffn = add(matmul(hidden, tape.Param(*layer.ffn_w2)), tape.Param(*layer.ffn_b2));
    x = layer_norm(add(x, dropout(ffn, rate, rng)), tape.Param(*layer.ln2_gamma),
                   tape.Param(*layer.ln2_beta));
  }
  return x;
}

}  // namespace spkmrc
