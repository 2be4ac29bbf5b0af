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

#include "spkmrc/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "json.hpp"
#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

using nlohmann::json;

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool IsPunct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Line and column (both 1-based) of a 1-based byte position.
std::pair<std::size_t, std::size_t> LineColumn(std::string_view text,
                                               std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t limit = std::min(text.size(), byte > 0 ? byte - 1 : 0);
  for (std::size_t i = 0; i < limit; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

class SchemaReader {
 public:
  explicit SchemaReader(std::string_view source) : source_(source) {}

  [[noreturn]] void Fail(const std::string& field, const std::string& what) const {
    throw SchemaError(std::string(source_) + ": " + field + ": " + what);
  }

  const json& Member(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) Fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) Fail(path + "." + key, "missing required field");
    return *it;
  }

  std::string String(const json& obj, const std::string& path, const char* key) const {
    const json& v = Member(obj, path, key);
    if (!v.is_string()) Fail(path + "." + key, "expected a string");
    return v.get<std::string>();
  }

  long long Int(const json& obj, const std::string& path, const char* key) const {
    const json& v = Member(obj, path, key);
    if (!v.is_number_integer()) Fail(path + "." + key, "expected an integer");
    return v.get<long long>();
  }

  bool Bool(const json& obj, const std::string& path, const char* key) const {
    const json& v = Member(obj, path, key);
    if (!v.is_boolean()) Fail(path + "." + key, "expected a boolean");
    return v.get<bool>();
  }

  // Missing optional arrays read as empty.
  const json* OptionalArray(const json& obj, const std::string& path,
                            const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_array()) Fail(path + "." + key, "expected an array");
    return &*it;
  }

 private:
  std::string_view source_;
};

std::string Indexed(const std::string& path, const char* key, std::size_t i) {
  return path + "." + key + "[" + std::to_string(i) + "]";
}

Dialogue ReadDialogue(const SchemaReader& reader, const json& jd,
                      const std::string& path) {
  Dialogue d;
  d.id = reader.String(jd, path, "id");

  const json& edus = reader.Member(jd, path, "edus");
  if (!edus.is_array()) reader.Fail(path + ".edus", "expected an array");
  if (edus.empty()) reader.Fail(path + ".edus", "dialogue has no utterances");
  for (std::size_t i = 0; i < edus.size(); ++i) {
    const std::string upath = Indexed(path, "edus", i);
    Utterance u;
    u.index = static_cast<int>(i);
    u.speaker = reader.String(edus[i], upath, "speaker");
    if (u.speaker.empty()) reader.Fail(upath + ".speaker", "empty speaker name");
    u.text = reader.String(edus[i], upath, "text");
    u.degenerate = u.text.empty();
    d.utterances.push_back(std::move(u));
  }
  const long long n = static_cast<long long>(d.utterances.size());

  if (const json* rels = reader.OptionalArray(jd, path, "relations")) {
    for (std::size_t i = 0; i < rels->size(); ++i) {
      const std::string rpath = Indexed(path, "relations", i);
      const json& jr = (*rels)[i];
      const long long x = reader.Int(jr, rpath, "x");
      const long long y = reader.Int(jr, rpath, "y");
      std::string label = reader.String(jr, rpath, "type");
      if (x < 0 || x >= n) reader.Fail(rpath + ".x", "utterance index out of range");
      if (y < 0 || y >= n) reader.Fail(rpath + ".y", "utterance index out of range");
      if (x == y) {
        reader.Fail(rpath, "self-relation (x == y == " + std::to_string(x) + ")");
      }
      if (label.empty()) reader.Fail(rpath + ".type", "empty relation label");
      d.relations.push_back(
          {static_cast<int>(x), static_cast<int>(y), std::move(label)});
    }
  }

  const std::string context = RenderContext(d).text;
  if (const json* qas = reader.OptionalArray(jd, path, "qas")) {
    for (std::size_t i = 0; i < qas->size(); ++i) {
      const std::string qpath = Indexed(path, "qas", i);
      const json& jq = (*qas)[i];
      Question q;
      q.id = reader.String(jq, qpath, "id");
      q.text = reader.String(jq, qpath, "question");
      const bool impossible = reader.Bool(jq, qpath, "is_impossible");
      if (const json* answers = reader.OptionalArray(jq, qpath, "answers")) {
        for (std::size_t k = 0; k < answers->size(); ++k) {
          const std::string apath = Indexed(qpath, "answers", k);
          Answer a;
          a.text = reader.String((*answers)[k], apath, "text");
          const long long start = reader.Int((*answers)[k], apath, "answer_start");
          if (start < 0 || static_cast<std::size_t>(start) + a.text.size() > context.size()) {
            reader.Fail(apath + ".answer_start", "offset outside rendered context");
          }
          a.char_start = static_cast<int>(start);
          if (a.text.empty() ||
              context.compare(a.char_start, a.text.size(), a.text) != 0) {
            reader.Fail(apath + ".text",
                        "does not match the rendered context at answer_start");
          }
          q.answers.push_back(std::move(a));
        }
      }
      if (impossible != q.answers.empty()) {
        reader.Fail(qpath + ".is_impossible", impossible
                                                  ? "unanswerable question has answers"
                                                  : "answerable question has no answers");
      }
      q.answerable = !impossible;
      d.questions.push_back(std::move(q));
    }
  }
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading

std::vector<Dialogue> ParseCorpus(std::string_view json_text,
                                  std::string_view source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = LineColumn(json_text, e.byte);
    throw ParseError(std::string(source_name) + ":" + std::to_string(line) + ":" +
                     std::to_string(col) + ": " + e.what());
  }
  SchemaReader reader(source_name);
  const json& dialogues = reader.Member(root, "$", "dialogues");
  if (!dialogues.is_array()) reader.Fail("$.dialogues", "expected an array");
  std::vector<Dialogue> out;
  out.reserve(dialogues.size());
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    out.push_back(ReadDialogue(reader, dialogues[i], Indexed("$", "dialogues", i)));
  }
  return out;
}

std::vector<Dialogue> LoadCorpus(const std::filesystem::path& path) {
  return ParseCorpus(ReadFile(path), path.string());
}

std::string CorpusToJson(const std::vector<Dialogue>& dialogues) {
  json root;
  json& arr = root["dialogues"] = json::array();
  for (const Dialogue& d : dialogues) {
    json jd;
    jd["id"] = d.id;
    jd["edus"] = json::array();
    for (const Utterance& u : d.utterances) {
      jd["edus"].push_back({{"speaker", u.speaker}, {"text", u.text}});
    }
    jd["relations"] = json::array();
    for (const DiscourseRelation& r : d.relations) {
      jd["relations"].push_back({{"x", r.source}, {"y", r.target}, {"type", r.label}});
    }
    jd["qas"] = json::array();
    for (const Question& q : d.questions) {
      json jq;
      jq["id"] = q.id;
      jq["question"] = q.text;
      jq["is_impossible"] = !q.answerable;
      jq["answers"] = json::array();
      for (const Answer& a : q.answers) {
        jq["answers"].push_back({{"text", a.text}, {"answer_start", a.char_start}});
      }
      jd["qas"].push_back(std::move(jq));
    }
    arr.push_back(std::move(jd));
  }
  return root.dump(1) + "\n";
}

void SaveCorpus(const std::vector<Dialogue>& dialogues,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << CorpusToJson(dialogues);
}

// ---------------------------------------------------------------------------
// Rendering and tokenization

RenderedContext RenderContext(const Dialogue& dialogue) {
  RenderedContext rc;
  for (const Utterance& u : dialogue.utterances) {
    if (!rc.text.empty()) {
      rc.text.push_back(' ');
      rc.char_to_utterance.push_back(u.index - 1);
    }
    rc.utterance_begin.push_back(rc.text.size());
    const std::string piece = u.speaker + ": " + u.text;
    rc.text += piece;
    rc.char_to_utterance.insert(rc.char_to_utterance.end(), piece.size(), u.index);
  }
  return rc;
}

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (IsSpace(c)) {
      ++i;
      continue;
    }
    if (IsPunct(c)) {
      tokens.push_back({std::string(1, c), i, i + 1});
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < text.size() && !IsSpace(text[i]) && !IsPunct(text[i])) ++i;
    std::string word(text.substr(begin, i - begin));
    for (char& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    tokens.push_back({std::move(word), begin, i});
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (const char* special : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) AddToken(special);
  RegisterRelation("[UNK_REL]");
}

int Vocabulary::Id(std::string_view token) const {
  auto it = token_ids_.find(token);
  return it == token_ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::TokenText(int id) const { return tokens_.at(id); }

bool Vocabulary::Contains(std::string_view token) const {
  return token_ids_.find(token) != token_ids_.end();
}

int Vocabulary::AddToken(const std::string& token) {
  auto it = token_ids_.find(token);
  if (it != token_ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  token_ids_.emplace(token, id);
  return id;
}

int Vocabulary::RegisterSpeaker(const std::string& name) {
  auto it = speaker_ids_.find(name);
  if (it != speaker_ids_.end()) return it->second;
  const int id = static_cast<int>(speakers_.size());
  speakers_.push_back(name);
  speaker_ids_.emplace(name, id);
  return id;
}

int Vocabulary::SpeakerId(std::string_view name) const {
  auto it = speaker_ids_.find(name);
  return it == speaker_ids_.end() ? kNone : it->second;
}

int Vocabulary::RegisterRelation(const std::string& label) {
  auto it = relation_ids_.find(label);
  if (it != relation_ids_.end()) return it->second;
  const int id = static_cast<int>(relations_.size());
  relations_.push_back(label);
  relation_ids_.emplace(label, id);
  return id;
}

int Vocabulary::RelationId(std::string_view label) const {
  auto it = relation_ids_.find(label);
  return it == relation_ids_.end() ? kUnknownRelation : it->second;
}

std::string Vocabulary::Serialize() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << i << '\n';
  for (std::size_t i = 0; i < speakers_.size(); ++i) {
    os << "@spk:" << speakers_[i] << '\t' << i << '\n';
  }
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    os << "@rel:" << relations_[i] << '\t' << i << '\n';
  }
  return os.str();
}

Vocabulary Vocabulary::Deserialize(std::string_view text) {
  Vocabulary v;
  v.tokens_.clear();
  v.token_ids_.clear();
  v.relations_.clear();
  v.relation_ids_.clear();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": missing tab");
    }
    const std::string key(line.substr(0, tab));
    int id = 0;
    try {
      id = std::stoi(std::string(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": bad id");
    }
    int assigned = 0;
    if (key.starts_with("@spk:")) {
      assigned = v.RegisterSpeaker(key.substr(5));
    } else if (key.starts_with("@rel:")) {
      assigned = v.RegisterRelation(key.substr(5));
    } else {
      assigned = v.AddToken(key);
    }
    if (assigned != id) {
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": ids are not dense (expected " + std::to_string(assigned) + ")");
    }
  }
  if (v.tokens_.size() < 4 || v.tokens_[kPad] != "[PAD]" || v.tokens_[kUnk] != "[UNK]" ||
      v.tokens_[kCls] != "[CLS]" || v.tokens_[kSep] != "[SEP]") {
    throw ParseError("vocabulary: reserved tokens missing or out of place");
  }
  if (v.relations_.empty()) v.RegisterRelation("[UNK_REL]");
  return v;
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << Serialize();
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  return Deserialize(ReadFile(path));
}

namespace {

template <typename Counts>
std::vector<std::string> ByFrequency(const Counts& counts, int min_freq) {
  std::vector<std::pair<std::string, int>> items;
  for (const auto& [key, count] : counts) {
    if (count >= min_freq) items.emplace_back(key, count);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (auto& item : items) out.push_back(std::move(item.first));
  return out;
}

}  // namespace

Vocabulary BuildVocabulary(std::span<const Dialogue> dialogues, int min_freq) {
  if (min_freq < 1) throw ConfigError("min_freq must be at least 1");
  std::map<std::string, int> token_counts;
  std::map<std::string, int> speaker_counts;
  std::map<std::string, int> relation_counts;
  for (const Dialogue& d : dialogues) {
    for (const Token& t : Tokenize(RenderContext(d).text)) ++token_counts[t.text];
    for (const Question& q : d.questions) {
      for (const Token& t : Tokenize(q.text)) ++token_counts[t.text];
    }
    for (const Utterance& u : d.utterances) ++speaker_counts[u.speaker];
    for (const DiscourseRelation& r : d.relations) ++relation_counts[r.label];
  }
  Vocabulary v;
  for (const std::string& t : ByFrequency(token_counts, min_freq)) v.AddToken(t);
  for (const std::string& s : ByFrequency(speaker_counts, 1)) v.RegisterSpeaker(s);
  for (const std::string& r : ByFrequency(relation_counts, 1)) v.RegisterRelation(r);
  return v;
}

// ---------------------------------------------------------------------------
// Encoding

std::pair<int, int> AlignAnswer(std::size_t char_start, std::string_view answer,
                                std::span<const Token> tokens) {
  const std::size_t char_end = char_start + answer.size();
  int first = kNone;
  int last = kNone;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.begin < char_end && char_start < t.end) {
      if (first == kNone) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  if (first == kNone) {
    throw AlignmentError("answer \"" + std::string(answer) + "\" at offset " +
                         std::to_string(char_start) + " overlaps no token");
  }
  return {first, last};
}

int EncodedExample::num_surviving_utterances() const {
  int count = 0;
  for (int sep : sep_position_of_utterance) {
    if (sep != kNone) ++count;
  }
  return count;
}

EncodedExample EncodeExample(const Dialogue& dialogue, const Question& question,
                             const Vocabulary& vocab, int max_len) {
  const std::vector<Token> q_tokens = Tokenize(question.text);
  if (static_cast<int>(q_tokens.size()) + 3 >= max_len) {
    throw QuestionTooLong("question " + question.id + " has " +
                          std::to_string(q_tokens.size()) + " tokens; max_len is " +
                          std::to_string(max_len));
  }

  EncodedExample e;
  e.dialogue_id = dialogue.id;
  e.question_id = question.id;
  const RenderedContext rc = RenderContext(dialogue);
  e.context = rc.text;

  const std::size_t n = dialogue.utterances.size();
  std::unordered_map<std::string, int> speaker_ordinal;
  for (const Utterance& u : dialogue.utterances) {
    auto [it, inserted] =
        speaker_ordinal.emplace(u.speaker, static_cast<int>(speaker_ordinal.size()));
    e.speaker_of_utterance.push_back(it->second);
  }
  e.sep_position_of_utterance.assign(n, kNone);

  auto push = [&e](int id, int segment, int utterance, int speaker, int begin, int end) {
    e.token_ids.push_back(id);
    e.segment_ids.push_back(segment);
    e.utterance_of_token.push_back(utterance);
    e.speaker_of_token.push_back(speaker);
    e.attention_pad_mask.push_back(1);
    e.token_char_begin.push_back(begin);
    e.token_char_end.push_back(end);
  };

  push(Vocabulary::kCls, 0, kNone, kNone, kNone, kNone);
  for (const Token& t : q_tokens) push(vocab.Id(t.text), 0, kNone, kNone, kNone, kNone);
  push(Vocabulary::kSep, 0, kNone, kNone, kNone, kNone);

  // Context tokens over the whole rendering, with their sequence positions
  // (kNone past the window).
  std::vector<Token> ctx_tokens;
  std::vector<int> ctx_position;
  for (std::size_t i = 0; i < n; ++i) {
    const Utterance& u = dialogue.utterances[i];
    const std::size_t base = rc.utterance_begin[i];
    const int utt = static_cast<int>(i);
    const int spk = e.speaker_of_utterance[i];
    for (Token t : Tokenize(u.speaker + ": " + u.text)) {
      t.begin += base;
      t.end += base;
      const bool fits = static_cast<int>(e.token_ids.size()) < max_len;
      ctx_position.push_back(fits ? static_cast<int>(e.token_ids.size()) : kNone);
      if (fits) {
        push(vocab.Id(t.text), 1, utt, spk, static_cast<int>(t.begin),
             static_cast<int>(t.end));
      }
      ctx_tokens.push_back(std::move(t));
    }
    if (static_cast<int>(e.token_ids.size()) < max_len) {
      e.sep_position_of_utterance[i] = static_cast<int>(e.token_ids.size());
      push(Vocabulary::kSep, 1, utt, spk, kNone, kNone);
    }
  }
  e.num_real_tokens = static_cast<int>(e.token_ids.size());
  while (static_cast<int>(e.token_ids.size()) < max_len) {
    push(Vocabulary::kPad, 0, kNone, kNone, kNone, kNone);
    e.attention_pad_mask.back() = 0;
  }

  for (const DiscourseRelation& r : dialogue.relations) {
    e.relations.push_back({r.source, r.target, vocab.RelationId(r.label), r.label});
  }

  e.answerable = question.answerable && !question.answers.empty();
  if (e.answerable) {
    const Answer& a = question.answers.front();
    const auto [first, last] = AlignAnswer(static_cast<std::size_t>(a.char_start),
                                           a.text, ctx_tokens);
    if (ctx_position[first] == kNone || ctx_position[last] == kNone) {
      e.answerable = false;
      e.answer_truncated = true;
    } else {
      e.gold_start = ctx_position[first];
      e.gold_end = ctx_position[last];
    }
  }
  return e;
}

std::string Detokenize(const EncodedExample& example, int start, int end) {
  const int len = static_cast<int>(example.length());
  if (start < 0 || end < start || end >= len) return "";
  if (!example.is_context_token(start) || !example.is_context_token(end)) return "";
  const int begin = example.token_char_begin[start];
  const int stop = example.token_char_end[end];
  return example.context.substr(begin, stop - begin);
}

}  // namespace spkmrc
