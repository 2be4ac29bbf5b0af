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

// Dialogue corpora: loading, context rendering, tokenization, vocabulary and
// per-question example encoding.
//
// Context rendering joins "<speaker>: <text>" for every utterance with single
// spaces. Answer offsets in corpus files index this rendered string.

#ifndef SPKMRC_CORPUS_H_
#define SPKMRC_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spkmrc {

// Marks "no utterance" / "no speaker" / "no position".
inline constexpr int kNone = -1;
inline constexpr int kDefaultMaxLen = 348;

struct Utterance {
  int index = 0;
  std::string speaker;
  std::string text;
  // Set when text is empty.
  bool degenerate = false;
};

struct DiscourseRelation {
  int source = 0;
  int target = 0;
  std::string label;
};

struct Answer {
  std::string text;
  int char_start = 0;
};

struct Question {
  std::string id;
  std::string text;
  bool answerable = false;
  std::vector<Answer> answers;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
  std::vector<DiscourseRelation> relations;
  std::vector<Question> questions;
};

// Throws ParseError (malformed JSON, with line and column) or SchemaError
// (naming the first offending field).
std::vector<Dialogue> LoadCorpus(const std::filesystem::path& path);
std::vector<Dialogue> ParseCorpus(std::string_view json_text,
                                  std::string_view source_name = "<memory>");
std::string CorpusToJson(const std::vector<Dialogue>& dialogues);
void SaveCorpus(const std::vector<Dialogue>& dialogues,
                const std::filesystem::path& path);

struct RenderedContext {
  std::string text;
  // Utterance index of every character; a separator space belongs to the
  // utterance before it.
  std::vector<int> char_to_utterance;
  // Offset of the first character of each utterance's "<speaker>: " prefix.
  std::vector<std::size_t> utterance_begin;
};

RenderedContext RenderContext(const Dialogue& dialogue);

struct Token {
  std::string text;
  std::size_t begin = 0;  // offsets into the original string, half-open
  std::size_t end = 0;
};

// Lowercases, splits on whitespace and makes every ASCII punctuation
// character a token of its own.
std::vector<Token> Tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  // Relation-label id used for labels never registered.
  static constexpr int kUnknownRelation = 0;

  Vocabulary();

  // Id of token, or kUnk.
  int Id(std::string_view token) const;
  const std::string& TokenText(int id) const;
  bool Contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  int AddToken(const std::string& token);

  int RegisterSpeaker(const std::string& name);
  // kNone when unregistered.
  int SpeakerId(std::string_view name) const;
  std::size_t num_speakers() const { return speakers_.size(); }

  int RegisterRelation(const std::string& label);
  // kUnknownRelation when unregistered.
  int RelationId(std::string_view label) const;
  const std::string& RelationLabel(int id) const { return relations_.at(id); }
  std::size_t num_relations() const { return relations_.size(); }

  // Line-oriented "token<TAB>id". Registry entries use the prefixes "@spk:"
  // and "@rel:", which the tokenizer can never produce.
  std::string Serialize() const;
  static Vocabulary Deserialize(std::string_view text);
  void Save(const std::filesystem::path& path) const;
  static Vocabulary Load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const = default;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> token_ids_;
  std::vector<std::string> speakers_;
  std::map<std::string, int, std::less<>> speaker_ids_;
  std::vector<std::string> relations_;
  std::map<std::string, int, std::less<>> relation_ids_;
};

// Frequencies count tokens of rendered contexts and of questions. Real tokens
// are ordered by frequency (descending), then lexicographically. Speaker names
// and relation labels are registered in the same way.
Vocabulary BuildVocabulary(std::span<const Dialogue> dialogues, int min_freq = 1);

struct EncodedRelation {
  int source = 0;
  int target = 0;
  int label_id = Vocabulary::kUnknownRelation;
  std::string label;
  bool operator==(const EncodedRelation&) const = default;
};

// Model input for one (dialogue, question) pair, laid out as
// [CLS] question [SEP] u0 [SEP] u1 [SEP] ... [PAD]*
struct EncodedExample {
  std::string dialogue_id;
  std::string question_id;
  std::string context;  // rendered context the char offsets refer to

  std::vector<int> token_ids;
  std::vector<int> segment_ids;         // 0 question side, 1 context side
  std::vector<int> utterance_of_token;  // kNone on CLS, question, padding
  std::vector<int> speaker_of_token;    // kNone on CLS, question, padding
  std::vector<int> attention_pad_mask;  // 1 real token, 0 padding
  std::vector<int> token_char_begin;    // kNone unless a context text token
  std::vector<int> token_char_end;

  // Per dialogue utterance: position of its closing [SEP], or kNone when
  // truncation removed it.
  std::vector<int> sep_position_of_utterance;
  // Per dialogue utterance: dense speaker ordinal in order of first
  // appearance within the dialogue.
  std::vector<int> speaker_of_utterance;
  std::vector<EncodedRelation> relations;

  bool answerable = false;
  // The first gold span was lost to truncation and the example downgraded.
  bool answer_truncated = false;
  int gold_start = 0;
  int gold_end = 0;
  int num_real_tokens = 0;

  std::size_t length() const { return token_ids.size(); }
  int num_utterances() const {
    return static_cast<int>(sep_position_of_utterance.size());
  }
  // Utterances whose closing [SEP] is inside the window. Truncation cuts
  // from the tail, so these are utterances 0..k-1.
  int num_surviving_utterances() const;
  bool is_context_token(int t) const { return token_char_begin[t] != kNone; }
  bool operator==(const EncodedExample&) const = default;
};

// Throws QuestionTooLong when the question plus three special tokens does not
// fit in max_len, AlignmentError when a gold answer cannot be aligned.
EncodedExample EncodeExample(const Dialogue& dialogue, const Question& question,
                             const Vocabulary& vocab, int max_len = kDefaultMaxLen);

// Inclusive token range of the tokens intersecting
// [char_start, char_start + |answer|). Throws AlignmentError when none does.
std::pair<int, int> AlignAnswer(std::size_t char_start, std::string_view answer,
                                std::span<const Token> tokens);

// Context substring covered by tokens start..end (inclusive). Empty when
// either end is not a context text token.
std::string Detokenize(const EncodedExample& example, int start, int end);

}  // namespace spkmrc

#endif  // SPKMRC_CORPUS_H_
