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

// Exact-match and token-F1 scoring of extractive answers.

#ifndef SPKMRC_METRICS_H_
#define SPKMRC_METRICS_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spkmrc/autodiff.h"
#include "spkmrc/corpus.h"

namespace spkmrc {

// Lowercase, drop ASCII punctuation, drop the articles "a", "an", "the",
// collapse whitespace.
std::string NormalizeAnswer(std::string_view s);

// Empty golds mean the question is unanswerable: the prediction scores 1 iff
// it is "". Otherwise the best score over golds.
Real ExactMatch(std::string_view prediction, std::span<const std::string> golds);
Real F1Score(std::string_view prediction, std::span<const std::string> golds);

struct QuestionRecord {
  std::string id;
  std::vector<std::string> golds;
  std::string prediction;
  Real em = 0.0;
  Real f1 = 0.0;
  bool operator==(const QuestionRecord&) const = default;
};

struct EvalReport {
  Real em = 0.0;  // percent
  Real f1 = 0.0;  // percent
  std::vector<QuestionRecord> records;
  int num_answerable = 0;
  int num_unanswerable = 0;
  // No questions: em and f1 are reported as 0.
  bool undefined = false;

  // "EM 66.7 F1 93.3 (answerable 2, unanswerable 1)"
  std::string Summary() const;
  bool operator==(const EvalReport&) const = default;
};

// {question_id: answer}, "" for no answer.
using Predictions = std::map<std::string, std::string>;

// Scores every question of the dialogues; a question without a prediction
// counts as predicted "".
EvalReport ScorePredictions(std::span<const Dialogue> dialogues,
                            const Predictions& predictions);

std::string PredictionsToJson(const Predictions& predictions);
Predictions PredictionsFromJson(std::string_view text);

}  // namespace spkmrc

#endif  // SPKMRC_METRICS_H_
