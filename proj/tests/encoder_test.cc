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

#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "spkmrc/corpus.h"
#include "spkmrc/encoder.h"
#include "spkmrc/errors.h"
#include "spkmrc/grad_check.h"
#include "spkmrc/params.h"
#include "spkmrc/speaker_attention.h"
#include "test_util.h"

namespace spkmrc {
namespace {

class EncoderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = LoadCorpus(testing::DataPath("vfat.json"));
    vocab_ = BuildVocabulary(corpus_);
    example_ = EncodeExample(corpus_[0], corpus_[0].questions[0], vocab_);
    config_.hidden = 16;
    config_.heads = 2;
    config_.layers = 2;
    config_.ffn = 32;
    config_.vocab_size = static_cast<int>(vocab_.size());
    config_.dropout = 0.0;
  }
  EncoderParams Make(ModelParams& params, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    return MakeEncoderParams(params, config_, rng);
  }

  std::vector<Dialogue> corpus_;
  Vocabulary vocab_;
  EncodedExample example_;
  EncoderConfig config_;
};

TEST_F(EncoderTest, OutputShape) {
  ModelParams params;
  const EncoderParams p = Make(params);
  Tape tape;
  const Var h = Encode(tape, example_, p, config_, PadKeyMask(example_));
  EXPECT_EQ(h.rows(), 348u);
  EXPECT_EQ(h.cols(), 16u);
}

TEST_F(EncoderTest, SegmentChangeAffectsOnlyChangedRows) {
  ModelParams params;
  const EncoderParams p = Make(params);
  EncodedExample other = example_;
  other.segment_ids[5] = 1 - other.segment_ids[5];
  Tape tape;
  const Tensor a = Embed(tape, example_, p).value();
  const Tensor b = Embed(tape, other, p).value();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    bool same = true;
    for (std::size_t c = 0; c < a.cols(); ++c) same = same && a(r, c) == b(r, c);
    EXPECT_EQ(same, r != 5) << r;
  }
}

TEST_F(EncoderTest, PadRowsDifferOnlyThroughPosition) {
  ModelParams params;
  EncoderParams p = Make(params);
  p.position_embedding->value.Fill(0.0);
  Tape tape;
  const Tensor e = Embed(tape, example_, p).value();
  const std::size_t first_pad = static_cast<std::size_t>(example_.num_real_tokens);
  for (std::size_t r = first_pad + 1; r < e.rows(); ++r) {
    for (std::size_t c = 0; c < e.cols(); ++c) ASSERT_EQ(e(r, c), e(first_pad, c));
  }
}

TEST_F(EncoderTest, OutOfRangeTokenIsIndexError) {
  ModelParams params;
  const EncoderParams p = Make(params);
  EncodedExample bad = example_;
  bad.token_ids[1] = config_.vocab_size;
  Tape tape;
  EXPECT_THROW(Embed(tape, bad, p), IndexError);
  EncoderConfig small = config_;
  small.max_len = 100;
  ModelParams params2;
  std::mt19937_64 rng(1);
  const EncoderParams p2 = MakeEncoderParams(params2, small, rng);
  EXPECT_THROW(Embed(tape, example_, p2), IndexError);
}

TEST_F(EncoderTest, PadEmbeddingDoesNotReachRealRows) {
  ModelParams params;
  EncoderParams p = Make(params);
  Tape t1;
  const Tensor before = Encode(t1, example_, p, config_, PadKeyMask(example_)).value();
  for (std::size_t c = 0; c < p.token_embedding->value.cols(); ++c) {
    p.token_embedding->value(Vocabulary::kPad, c) += 3.0;
  }
  Tape t2;
  const Tensor after = Encode(t2, example_, p, config_, PadKeyMask(example_)).value();
  const std::size_t n = static_cast<std::size_t>(example_.num_real_tokens);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < before.cols(); ++c) ASSERT_EQ(before(r, c), after(r, c));
  EXPECT_NE(before(n, 0), after(n, 0));
}

TEST_F(EncoderTest, PadIsolationGradient) {
  ModelParams params;
  EncoderParams p = Make(params);
  std::mt19937_64 rng(3);
  Tensor readout = testing::RandomTensor(348, 16, rng);
  for (std::size_t r = static_cast<std::size_t>(example_.num_real_tokens); r < 348; ++r)
    for (std::size_t c = 0; c < 16; ++c) readout(r, c) = 0.0;
  params.ZeroGrad();
  Tape tape;
  tape.Backward(weighted_sum(Encode(tape, example_, p, config_, PadKeyMask(example_)), readout));
  for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(p.token_embedding->grad(Vocabulary::kPad, c), 0.0);
  EXPECT_NE(p.token_embedding->grad(Vocabulary::kCls, 0), 0.0);
}

TEST_F(EncoderTest, ZeroLayersIsEmbed) {
  config_.layers = 0;
  ModelParams params;
  const EncoderParams p = Make(params);
  Tape tape;
  EXPECT_EQ(Encode(tape, example_, p, config_, PadKeyMask(example_)).value(),
            Embed(tape, example_, p).value());
}

TEST_F(EncoderTest, DeterministicInEvalMode) {
  ModelParams a, b;
  const EncoderParams pa = Make(a, 9), pb = Make(b, 9);
  Tape ta, tb;
  EXPECT_EQ(Encode(ta, example_, pa, config_, PadKeyMask(example_)).value(),
            Encode(tb, example_, pb, config_, PadKeyMask(example_)).value());
}

TEST_F(EncoderTest, DropoutOnlyWithRng) {
  config_.dropout = 0.3;
  ModelParams params;
  const EncoderParams p = Make(params);
  std::mt19937_64 rng(4);
  Tape t1, t2, t3;
  const Tensor eval = Encode(t1, example_, p, config_, PadKeyMask(example_)).value();
  EXPECT_EQ(eval, Encode(t2, example_, p, config_, PadKeyMask(example_)).value());
  EXPECT_NE(eval, Encode(t3, example_, p, config_, PadKeyMask(example_), &rng).value());
}

TEST_F(EncoderTest, ParameterCountFormula) {
  for (int layers : {0, 1, 3}) {
    config_.layers = layers;
    ModelParams params;
    Make(params);
    EXPECT_EQ(params.TotalCount(), EncoderParamCount(config_));
  }
  // Names are unique and dotted.
  ModelParams params;
  Make(params);
  EXPECT_NE(params.Find("encoder.layer1.attn.head0.Wq"), nullptr);
  EXPECT_NE(params.Find("encoder.layer0.ffn.W1"), nullptr);
}

TEST_F(EncoderTest, InitializationConvention) {
  ModelParams params;
  const EncoderParams p = Make(params);
  for (Real v : p.embed_ln_gamma->value.data()) EXPECT_EQ(v, 1.0);
  for (Real v : p.embed_ln_beta->value.data()) EXPECT_EQ(v, 0.0);
  for (Real v : p.layers[0].ffn_b1->value.data()) EXPECT_EQ(v, 0.0);
  Real sq = 0.0;
  const Tensor& w = p.token_embedding->value;
  for (Real v : w.data()) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / static_cast<Real>(w.size())), 0.02, 0.004);
}

TEST_F(EncoderTest, ConfigValidation) {
  EncoderConfig c = config_;
  c.heads = 3;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = config_;
  c.dropout = 1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST_F(EncoderTest, EmbedGradCheckOnSixTokens) {
  Dialogue d = testing::MakeDialogue({{"a", "hi"}});
  const Question q = testing::Unanswerable("q", "x");
  const std::vector<Dialogue> small = {d};
  const Vocabulary v = BuildVocabulary(small);
  const EncodedExample e = EncodeExample(d, q, v, 6);
  EXPECT_EQ(e.num_real_tokens, 6);
  config_.vocab_size = static_cast<int>(v.size());
  config_.max_len = 6;
  config_.init_std = 0.5;
  ModelParams params;
  const EncoderParams p = Make(params);
  std::mt19937_64 rng(5);
  const Tensor readout = testing::RandomTensor(6, 16, rng);
  EXPECT_LT(GradCheck([&](Tape& t) { return weighted_sum(Embed(t, e, p), readout); }, params)
                .max_rel_error,
            1e-6);
  EXPECT_LT(GradCheck([&](Tape& t) { return weighted_sum(Encode(t, e, p, config_, PadKeyMask(e)), readout); },
                      params)
                .max_rel_error,
            1e-6);
}

}  // namespace
}  // namespace spkmrc
