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

#include "spkmrc/synth.h"

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

const std::vector<std::string> kNames = {
    "alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi",
    "ivan", "judy", "mallory", "oscar", "peggy", "trent", "victor", "wendy"};
const std::vector<std::string> kItems = {
    "printer", "router", "kernel", "mouse", "monitor", "keyboard", "driver", "webcam",
    "battery", "charger", "modem", "firewall", "scanner", "touchpad", "bootloader", "headset"};
const std::vector<std::string> kCues = {
    "wifi", "sound", "video", "network", "graphics", "bluetooth", "usb", "display",
    "audio", "login", "disk", "memory", "printing", "suspend", "mount", "locale"};
const std::vector<std::string> kFillers = {
    "anyone here ?", "thanks for the help", "let me check that", "did you try a reboot ?",
    "that sounds odd", "which release are you on ?"};

constexpr const char* kItemPrefix = "my ";
constexpr const char* kItemSuffix = " is broken";

template <typename T>
std::vector<T> Sample(const std::vector<T>& pool, int k, std::mt19937_64& rng) {
  std::vector<T> copy = pool;
  std::shuffle(copy.begin(), copy.end(), rng);
  copy.resize(static_cast<std::size_t>(k));
  return copy;
}

int Uniform(int lo, int hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

std::vector<Dialogue> GenerateSyntheticCorpus(const SynthOptions& options) {
  if (options.num_dialogues < 0) throw ConfigError("synth: num_dialogues must be >= 0");
  if (options.num_speakers < 2 || options.num_speakers > static_cast<int>(kNames.size())) {
    throw ConfigError("synth: num_speakers must be in [2, 16]");
  }
  const int fixed = options.num_speakers + 2;
  if (options.min_utterances < fixed || options.max_utterances < options.min_utterances) {
    throw ConfigError("synth: need min_utterances >= num_speakers + 2 <= max_utterances");
  }
  std::mt19937_64 rng(options.seed);
  std::vector<Dialogue> corpus;
  for (int k = 0; k < options.num_dialogues; ++k) {
    Dialogue d;
    d.id = "synth_" + std::to_string(k);
    const std::vector<std::string> speakers = Sample(kNames, options.num_speakers, rng);
    const std::vector<std::string> items = Sample(kItems, options.num_speakers, rng);
    const std::vector<std::string> cues = Sample(kCues, 3, rng);
    const int n = Uniform(options.min_utterances, options.max_utterances, rng);

    // Slot roles: 0..S-1 item utterances, S and S+1 cue utterances, rest filler.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const int cue_speaker_a = Uniform(0, options.num_speakers - 1, rng);
    int cue_speaker_b = Uniform(0, options.num_speakers - 2, rng);
    if (cue_speaker_b >= cue_speaker_a) ++cue_speaker_b;
    const int cue_speakers[2] = {cue_speaker_a, cue_speaker_b};

    d.utterances.resize(static_cast<std::size_t>(n));
    std::vector<int> item_utterance(static_cast<std::size_t>(options.num_speakers));
    int cue_utterance[2] = {0, 0};
    for (int role = 0; role < n; ++role) {
      const int pos = order[static_cast<std::size_t>(role)];
      Utterance& u = d.utterances[static_cast<std::size_t>(pos)];
      u.index = pos;
      if (role < options.num_speakers) {
        u.speaker = speakers[static_cast<std::size_t>(role)];
        u.text = kItemPrefix + items[static_cast<std::size_t>(role)] + kItemSuffix;
        item_utterance[static_cast<std::size_t>(role)] = pos;
      } else if (role < fixed) {
        const int c = role - options.num_speakers;
        u.speaker = speakers[static_cast<std::size_t>(cue_speakers[c])];
        u.text = "i have " + cues[static_cast<std::size_t>(c)] + " trouble since yesterday";
        cue_utterance[c] = pos;
      } else {
        u.speaker = speakers[static_cast<std::size_t>(Uniform(0, options.num_speakers - 1, rng))];
        u.text = kFillers[static_cast<std::size_t>(
            Uniform(0, static_cast<int>(kFillers.size()) - 1, rng))];
      }
    }

    std::set<std::pair<int, int>> linked;
    for (int c = 0; c < 2; ++c) {
      const int src = cue_utterance[c];
      const int tgt = item_utterance[static_cast<std::size_t>(cue_speakers[c])];
      d.relations.push_back({src, tgt, kPlantedRelation});
      linked.insert({src, tgt});
    }
    for (int r = 0; r < options.extra_relations; ++r) {
      const int src = Uniform(0, n - 1, rng);
      int tgt = Uniform(0, n - 2, rng);
      if (tgt >= src) ++tgt;
      if (!linked.insert({src, tgt}).second) continue;
      d.relations.push_back({src, tgt, "Comment"});
    }

    const RenderedContext ctx = RenderContext(d);
    for (int c = 0; c < 2; ++c) {
      const int speaker = cue_speakers[c];
      const auto& u = d.utterances[static_cast<std::size_t>(item_utterance[static_cast<std::size_t>(speaker)])];
      Question q;
      q.id = d.id + "_q" + std::to_string(c);
      q.text = "what is broken for the user with " + cues[static_cast<std::size_t>(c)] + " trouble ?";
      q.answerable = true;
      const std::size_t start = ctx.utterance_begin[static_cast<std::size_t>(u.index)] +
                                u.speaker.size() + 2 + std::string(kItemPrefix).size();
      q.answers.push_back({items[static_cast<std::size_t>(speaker)], static_cast<int>(start)});
      d.questions.push_back(std::move(q));
    }
    Question none;
    none.id = d.id + "_q2";
    none.text = "what is broken for the user with " + cues[2] + " trouble ?";
    d.questions.push_back(std::move(none));
    corpus.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace spkmrc
