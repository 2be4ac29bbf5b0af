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

#include "spkmrc/metrics.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

std::vector<std::string> SplitWords(std::string_view s) {
  std::vector<std::string> words;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

Real TokenF1(std::string_view prediction, std::string_view gold) {
  const std::vector<std::string> pred = SplitWords(NormalizeAnswer(prediction));
  const std::vector<std::string> ref = SplitWords(NormalizeAnswer(gold));
  if (pred.empty() || ref.empty()) return pred == ref ? 1.0 : 0.0;
  std::map<std::string, int> counts;
  for (const std::string& w : ref) ++counts[w];
  int common = 0;
  for (const std::string& w : pred) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const Real precision = static_cast<Real>(common) / static_cast<Real>(pred.size());
  const Real recall = static_cast<Real>(common) / static_cast<Real>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::string NormalizeAnswer(std::string_view s) {
  std::string lowered;
  lowered.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 128 && std::ispunct(u)) continue;
    lowered.push_back(static_cast<char>(std::tolower(u)));
  }
  std::string out;
  for (const std::string& w : SplitWords(lowered)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

Real ExactMatch(std::string_view prediction, std::span<const std::string> golds) {
  if (golds.empty()) return prediction.empty() ? 1.0 : 0.0;
  const std::string pred = NormalizeAnswer(prediction);
  for (const std::string& g : golds) {
    if (NormalizeAnswer(g) == pred) return 1.0;
  }
  return 0.0;
}

Real F1Score(std::string_view prediction, std::span<const std::string> golds) {
  if (golds.empty()) return prediction.empty() ? 1.0 : 0.0;
  Real best = 0.0;
  for (const std::string& g : golds) best = std::max(best, TokenF1(prediction, g));
  return best;
}

std::string EvalReport::Summary() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "EM %.1f F1 %.1f (answerable %d, unanswerable %d)%s", em, f1,
                num_answerable, num_unanswerable, undefined ? " [no questions]" : "");
  return buf;
}

EvalReport ScorePredictions(std::span<const Dialogue> dialogues, const Predictions& predictions) {
  EvalReport report;
  Real em_total = 0.0;
  Real f1_total = 0.0;
  for (const Dialogue& d : dialogues) {
    for (const Question& q : d.questions) {
      QuestionRecord r;
      r.id = q.id;
      if (q.answerable) {
        for (const Answer& a : q.answers) r.golds.push_back(a.text);
        ++report.num_answerable;
      } else {
        ++report.num_unanswerable;
      }
      auto it = predictions.find(q.id);
      if (it != predictions.end()) r.prediction = it->second;
      r.em = ExactMatch(r.prediction, r.golds);
      r.f1 = F1Score(r.prediction, r.golds);
      em_total += r.em;
      f1_total += r.f1;
      report.records.push_back(std::move(r));
    }
  }
  if (report.records.empty()) {
    report.undefined = true;
    return report;
  }
  const Real n = static_cast<Real>(report.records.size());
  report.em = 100.0 * em_total / n;
  report.f1 = 100.0 * f1_total / n;
  return report;
}

std::string PredictionsToJson(const Predictions& predictions) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, answer] : predictions) j[id] = answer;
  return j.dump(1) + "\n";
}

Predictions PredictionsFromJson(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("predictions: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("predictions: expected a JSON object");
  Predictions out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string()) throw SchemaError("predictions: " + it.key() + " is not a string");
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

}  // namespace spkmrc
