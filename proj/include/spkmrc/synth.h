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

// Templated multi-party dialogues with planted same-speaker answer cues and
// planted discourse relations.
//
// Every speaker reports one broken item. Two speakers also mention a cue
// ("i have <cue> trouble ..."). A question names a cue and asks for the item
// reported by the speaker of that cue, so the answer is only recoverable by
// linking utterances of the same speaker. A third question names a cue absent
// from the dialogue and is unanswerable.

#ifndef SPKMRC_SYNTH_H_
#define SPKMRC_SYNTH_H_

#include <cstdint>
#include <vector>

#include "spkmrc/corpus.h"

namespace spkmrc {

struct SynthOptions {
  int num_dialogues = 16;
  std::uint64_t seed = 1;
  int num_speakers = 4;
  int min_utterances = 6;
  int max_utterances = 8;
  // "Comment" relations added between random utterance pairs.
  int extra_relations = 2;
};

// Label of the planted cue -> item relation.
inline constexpr const char* kPlantedRelation = "Question-answer_pair";

std::vector<Dialogue> GenerateSyntheticCorpus(const SynthOptions& options);

}  // namespace spkmrc

#endif  // SPKMRC_SYNTH_H_
