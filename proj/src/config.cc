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

#include "spkmrc/config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void BadValue(std::string_view key, std::string_view value) {
  throw ConfigError("config: bad value '" + std::string(value) + "' for " + std::string(key));
}

template <typename Int>
Int ParseInt(std::string_view key, std::string_view value) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) BadValue(key, value);
  return out;
}

Real ParseReal(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  Real out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    BadValue(key, value);
  }
  if (used != s.size()) BadValue(key, value);
  return out;
}

bool ParseBool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  BadValue(key, value);
}

std::string FormatReal(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(TrainConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field IntField(T TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*member = ParseInt<T>(k, v);
          },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field RealField(Real TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*member = ParseReal(k, v);
          },
          [member](const TrainConfig& c) { return FormatReal(c.*member); }};
}

template <typename Sub, typename T>
Field NestedInt(Sub TrainConfig::*sub, T Sub::*member) {
  return {[sub, member](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*sub.*member = ParseInt<T>(k, v);
          },
          [sub, member](const TrainConfig& c) { return std::to_string(c.*sub.*member); }};
}

template <typename Sub>
Field NestedReal(Sub TrainConfig::*sub, Real Sub::*member) {
  return {[sub, member](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*sub.*member = ParseReal(k, v);
          },
          [sub, member](const TrainConfig& c) { return FormatReal(c.*sub.*member); }};
}

Field AblationFlag(bool AblationConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) {
            c.ablation.*member = ParseBool(k, v);
          },
          [member](const TrainConfig& c) {
            return std::string(c.ablation.*member ? "true" : "false");
          }};
}

const std::vector<std::pair<std::string, Field>>& Fields() {
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"learning_rate", RealField(&TrainConfig::learning_rate)},
      {"batch_size", IntField(&TrainConfig::batch_size)},
      {"max_steps", IntField(&TrainConfig::max_steps)},
      {"max_epochs", IntField(&TrainConfig::max_epochs)},
      {"seed", IntField(&TrainConfig::seed)},
      {"weight_decay", RealField(&TrainConfig::weight_decay)},
      {"clip_norm", RealField(&TrainConfig::clip_norm)},
      {"use_speaker_masking", AblationFlag(&AblationConfig::use_speaker_masking)},
      {"use_speaker_graph", AblationFlag(&AblationConfig::use_speaker_graph)},
      {"use_discourse_graph", AblationFlag(&AblationConfig::use_discourse_graph)},
      {"hidden", NestedInt(&TrainConfig::encoder, &EncoderConfig::hidden)},
      {"heads", NestedInt(&TrainConfig::encoder, &EncoderConfig::heads)},
      {"layers", NestedInt(&TrainConfig::encoder, &EncoderConfig::layers)},
      {"ffn", NestedInt(&TrainConfig::encoder, &EncoderConfig::ffn)},
      {"max_len", NestedInt(&TrainConfig::encoder, &EncoderConfig::max_len)},
      {"dropout", NestedReal(&TrainConfig::encoder, &EncoderConfig::dropout)},
      {"init_std", NestedReal(&TrainConfig::encoder, &EncoderConfig::init_std)},
      {"graph_layers", IntField(&TrainConfig::graph_layers)},
      {"precision", IntField(&TrainConfig::precision)},
      {"min_freq", IntField(&TrainConfig::min_freq)},
      {"max_answer_len", IntField(&TrainConfig::max_answer_len)},
      {"null_threshold", RealField(&TrainConfig::null_threshold)},
      {"checkpoint_every", IntField(&TrainConfig::checkpoint_every)},
      {"eval_every", IntField(&TrainConfig::eval_every)},
      {"stop_at_train_em", RealField(&TrainConfig::stop_at_train_em)},
  };
  return fields;
}

const Field& FindField(std::string_view key) {
  for (const auto& [name, field] : Fields()) {
    if (name == key) return field;
  }
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

void TrainConfig::Set(std::string_view key, std::string_view value) {
  FindField(key).set(*this, key, Trim(value));
}

std::string TrainConfig::Get(std::string_view key) const { return FindField(key).get(*this); }

const std::vector<std::string>& TrainConfig::Keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : Fields()) out.push_back(name);
    return out;
  }();
  return keys;
}

void TrainConfig::Validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("config: learning_rate must be >= 0");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (max_steps < 0) throw ConfigError("config: max_steps must be >= 0");
  if (max_epochs < 0) throw ConfigError("config: max_epochs must be >= 0");
  if (weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
  if (graph_layers < 0) throw ConfigError("config: graph_layers must be >= 0");
  if (precision != 64) {
    throw ConfigError("config: precision " + std::to_string(precision) +
                      " is not supported; tensors are 64-bit");
  }
  if (min_freq < 1) throw ConfigError("config: min_freq must be >= 1");
  if (max_answer_len < 1) throw ConfigError("config: max_answer_len must be >= 1");
  if (checkpoint_every < 0 || eval_every < 0) {
    throw ConfigError("config: checkpoint_every and eval_every must be >= 0");
  }
  EncoderConfig e = encoder;
  e.vocab_size = std::max(e.vocab_size, 4);
  e.Validate();
}

std::string TrainConfig::ToText() const {
  std::ostringstream os;
  for (const auto& [name, field] : Fields()) os << name << " = " << field.get(*this) << '\n';
  return os.str();
}

void TrainConfig::ApplyText(std::string_view text) {
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = Trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
}

TrainConfig TrainConfig::FromText(std::string_view text) {
  TrainConfig c;
  c.ApplyText(text);
  return c;
}

TrainConfig TrainConfig::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return FromText(ss.str());
}

ModelConfig TrainConfig::ToModelConfig(int vocab_size, int num_relation_labels) const {
  ModelConfig m;
  m.encoder = encoder;
  m.encoder.vocab_size = vocab_size;
  m.ablation = ablation;
  m.graph_layers = graph_layers;
  m.num_relation_labels = num_relation_labels;
  return m;
}

bool TrainConfig::operator==(const TrainConfig& other) const {
  return ToText() == other.ToText();
}

}  // namespace spkmrc
