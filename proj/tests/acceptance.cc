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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [criterion...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spkmrc/checkpoint.h"
#include "spkmrc/config.h"
#include "spkmrc/grad_suite.h"
#include "spkmrc/metrics.h"
#include "spkmrc/model.h"
#include "spkmrc/relational_graphs.h"
#include "spkmrc/span_model.h"
#include "spkmrc/speaker_attention.h"
#include "spkmrc/synth.h"
#include "spkmrc/trainer.h"
#include "test_util.h"

namespace spkmrc {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string ConfigPath(const std::string& name) {
  return std::string(SPKMRC_TEST_DATA) + "/../../configs/" + name;
}

std::vector<Dialogue> Synthetic(int n, std::uint64_t seed) {
  SynthOptions options;
  options.num_dialogues = n;
  options.seed = seed;
  return GenerateSyntheticCorpus(options);
}

EncodedExample EncodeFirst(const Dialogue& d, int max_len) {
  const std::vector<Dialogue> corpus = {d};
  return EncodeExample(d, d.questions.at(0), BuildVocabulary(corpus), max_len);
}

std::multiset<GraphEdge> EdgeSet(const HeteroGraph& g) { return {g.edges.begin(), g.edges.end()}; }

// 1. Finite-difference gradient checks; each line shows the worst relative
// error and how many coordinates were scored.
Outcome GradientFidelity() {
  const TrainConfig config = TrainConfig::FromFile(ConfigPath("gradcheck.cfg"));
  const auto start = Clock::now();
  bool pass = true;
  std::string detail;
  for (const std::string& module : GradCheckModules()) {
    const ModuleGradCheck r = RunModuleGradCheck(module, config);
    const Real limit = module == "model" ? 1e-4 : 1e-6;
    const std::size_t scored = r.result.coords_checked - r.result.coords_at_noise_floor;
    pass = pass && r.result.max_rel_error < limit && scored > 0;
    detail += Format("%s %.1e/%zu ", module.c_str(), r.result.max_rel_error, scored);
  }
  const double seconds = Seconds(start);
  pass = pass && seconds < 60.0;
  return {pass, detail + Format("(%.1f s)", seconds)};
}

// 2. Masked attention against the allowed-set reference.
Outcome MaskedAttentionOracle() {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.5);
  Real worst_blocked = 0.0, worst_out = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int heads = 1 << (rng() % 3);
    const int dk = 1 + static_cast<int>(rng() % 4);
    const int d = heads * dk;
    const std::size_t n = 1 + rng() % 12;
    ModelParams params;
    const AttentionParams p = MakeAttentionParams(params, "a", d, heads, 0.7, rng);
    const Tensor h = testing::RandomTensor(n, static_cast<std::size_t>(d), rng);
    Tensor mask(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) mask(i, j) = coin(rng) ? 0.0 : -kLarge;
      mask(i, rng() % n) = 0.0;
    }
    Tape tape;
    std::vector<Tensor> weights;
    const Tensor out = MaskedMhsa(tape.Constant(h), mask, p, &weights).value();
    for (const Tensor& w : weights) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (mask[i] != 0.0) worst_blocked = std::max(worst_blocked, w[i]);
      }
    }
    auto values = [](const std::vector<Parameter*>& ws) {
      std::vector<Tensor> out;
      for (const Parameter* w : ws) out.push_back(w->value);
      return out;
    };
    const Tensor ref = testing::ReferenceMaskedMhsa(h, mask, values(p.wq), values(p.wk),
                                                    values(p.wv), p.wo->value);
    worst_out = std::max(worst_out, testing::MaxAbsDiff(out, ref));
  }
  return {worst_blocked < 1e-12 && worst_out < 1e-10,
          Format("200 configs, max blocked weight %.1e, max output diff %.1e", worst_blocked,
                 worst_out)};
}

// 3. Mask partition and speaker relabel invariance.
Outcome MaskPartitionAndRelabel() {
  const std::vector<Dialogue> corpus = Synthetic(100, 3);
  std::mt19937_64 rng(3);
  int partition_failures = 0, relabel_failures = 0, pairs = 0;
  std::vector<std::string> pool;
  for (char a = 'a'; a <= 'z'; ++a) pool.push_back(std::string("spk") + a);
  for (const Dialogue& d : corpus) {
    const EncodedExample e = EncodeFirst(d, 128);
    const SpeakerMasks m = BuildMasks(e);
    for (std::size_t i = 0; i < e.length(); ++i) {
      for (std::size_t j = 0; j < e.length(); ++j) {
        if (i == j || e.speaker_of_token[i] == kNone || e.speaker_of_token[j] == kNone) continue;
        ++pairs;
        if ((m.same(i, j) == 0.0) == (m.different(i, j) == 0.0)) ++partition_failures;
      }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    std::map<std::string, std::string> names;
    Dialogue renamed = d;
    for (Utterance& u : renamed.utterances) {
      u.speaker = names.try_emplace(u.speaker, pool[names.size()]).first->second;
    }
    const EncodedExample re = EncodeFirst(renamed, 128);
    const SpeakerMasks rm = BuildMasks(re);
    const bool same = rm.same == m.same && rm.different == m.different &&
                      EdgeSet(BuildSpeakerGraph(re)) == EdgeSet(BuildSpeakerGraph(e));
    if (!same) ++relabel_failures;
  }
  return {partition_failures == 0 && relabel_failures == 0,
          Format("100 dialogues, %d real-speaker pairs, partition failures %d, relabel failures %d",
                 pairs, partition_failures, relabel_failures)};
}

// 4. Graph construction counts.
Outcome GraphConstruction() {
  const std::vector<Dialogue> vfat = LoadCorpus(testing::DataPath("vfat.json"));
  const HeteroGraph g = BuildSpeakerGraph(EncodeFirst(vfat[0], kDefaultMaxLen));
  const std::size_t same = g.CountEdges(speaker_edge::kSameSpeaker);
  const std::size_t global = g.CountEdges(speaker_edge::kGlobalOut);
  bool pass = same == 8 && global == 7 && g.num_nodes() == 8;
  int mismatches = 0;
  SynthOptions options;
  options.num_dialogues = 100;
  options.seed = 4;
  options.extra_relations = 5;
  for (const Dialogue& d : GenerateSyntheticCorpus(options)) {
    const EncodedExample e = EncodeFirst(d, 160);
    const HeteroGraph sg = BuildSpeakerGraph(e);
    const HeteroGraph dg = BuildDiscourseGraph(e);
    // Direct enumeration of ordered same-speaker pairs.
    std::size_t expected_same = 0;
    for (const Utterance& a : d.utterances)
      for (const Utterance& b : d.utterances) expected_same += a.index != b.index && a.speaker == b.speaker;
    std::size_t roles = 0;
    for (int t = 0; t < 4; ++t) roles += dg.CountEdges(t);
    const bool ok = sg.CountEdges(speaker_edge::kSameSpeaker) == expected_same &&
                    sg.CountEdges(speaker_edge::kGlobalOut) == sg.num_nodes() - 1 &&
                    roles == 4 * d.relations.size() &&
                    dg.CountEdges(discourse_edge::kGlobalOut) == dg.num_nodes() - 1;
    mismatches += !ok;
  }
  pass = pass && mismatches == 0;
  return {pass, Format("vfat fixture: %zu nodes, %zu SAME_SPEAKER, %zu GLOBAL_OUT; 100 random "
                       "dialogues, %d mismatches",
                       g.num_nodes(), same, global, mismatches)};
}

// 5. R-GCN layer against the double-loop reference.
Outcome RgcnOracle() {
  std::mt19937_64 rng(5);
  Real worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const int types = 1 + static_cast<int>(rng() % 4);
    const int d = 1 + static_cast<int>(rng() % 8);
    HeteroGraph g;
    for (int t = 0; t < types; ++t) g.edge_types.push_back("T" + std::to_string(t));
    for (int i = 0; i < n; ++i) g.nodes.push_back({NodeKind::kUtterance, i, kNone, ""});
    std::set<GraphEdge> edges;
    const std::uint64_t m = rng() % static_cast<std::uint64_t>(n * n * types + 1);
    for (std::uint64_t k = 0; k < m; ++k) {
      edges.insert({static_cast<int>(rng() % n), static_cast<int>(rng() % n),
                    static_cast<int>(rng() % types)});
    }
    g.edges.assign(edges.begin(), edges.end());
    ModelParams params;
    const RgcnParams p = MakeRgcnParams(params, "r", g.edge_types, d, 1, 0, 0.6, rng);
    p.layers[0].bias->value = testing::RandomTensor(1, static_cast<std::size_t>(d), rng);
    const Tensor states =
        testing::RandomTensor(static_cast<std::size_t>(n), static_cast<std::size_t>(d), rng);
    std::vector<testing::RefEdge> ref_edges;
    for (const GraphEdge& e : g.edges) ref_edges.push_back({e.src, e.dst, e.type});
    std::vector<Tensor> w_rel;
    for (const Parameter* w : p.layers[0].w_relation) w_rel.push_back(w->value);
    Tape tape;
    const Tensor out = RgcnLayer(g, tape.Constant(states), p.layers[0]).value();
    worst = std::max(worst, testing::MaxAbsDiff(out, testing::ReferenceRgcnLayer(
                                                         n, types, ref_edges, states, w_rel,
                                                         p.layers[0].w_self->value,
                                                         p.layers[0].bias->value)));
  }
  return {worst < 1e-10, Format("100 graphs, max diff %.1e", worst)};
}

// 6. Overfit the synthetic corpus; the ablated model must end lower.
Outcome Learnability() {
  const std::vector<Dialogue> corpus = Synthetic(16, 1);
  const TrainConfig config = TrainConfig::FromFile(ConfigPath("synth.cfg"));
  const TrainResult full = Train(corpus, config);
  const Real full_em = Evaluate(full.checkpoint, corpus).report.em;

  TrainConfig ablated = config;
  ablated.ablation = {false, false, false};
  ablated.stop_at_train_em = -1.0;
  ablated.eval_every = 0;
  const TrainResult base = Train(corpus, ablated);
  const Real base_em = Evaluate(base.checkpoint, corpus).report.em;
  const bool pass = full_em == 100.0 && full.steps <= 2000 && full.seconds < 600.0 &&
                    base_em < full_em;
  return {pass, Format("full EM %.1f at step %lld in %.0f s; ablated EM %.1f after %lld steps",
                       full_em, static_cast<long long>(full.steps), full.seconds, base_em,
                       static_cast<long long>(base.steps))};
}

TrainConfig SmallConfig() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.batch_size = 2;
  c.max_steps = 40;
  c.encoder.hidden = 16;
  c.encoder.heads = 2;
  c.encoder.layers = 1;
  c.encoder.ffn = 32;
  c.encoder.max_len = 96;
  c.encoder.dropout = 0.0;
  return c;
}

bool FiniteAndDecreasing(const std::vector<LossRecord>& log) {
  if (log.size() < 10) return false;
  Real first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    first += log[i].mean_loss;
    last += log[log.size() - 1 - i].mean_loss;
  }
  for (const LossRecord& l : log) {
    if (!std::isfinite(l.mean_loss)) return false;
  }
  return last < first;
}

// 7. Ablation parameter accounting and trainability.
Outcome AblationAccounting() {
  const std::vector<Dialogue> corpus = Synthetic(2, 7);
  const TrainConfig base = SmallConfig();
  const std::size_t d = static_cast<std::size_t>(base.encoder.hidden);
  const std::vector<Dialogue> vocab_corpus = corpus;
  const Vocabulary vocab = BuildVocabulary(vocab_corpus);
  const int labels = std::max(1, static_cast<int>(vocab.num_relations()));
  const std::size_t full_count =
      SpeakerMrcModel(base.ToModelConfig(static_cast<int>(vocab.size()), labels), 1)
          .params()
          .TotalCount();
  // Own parameters by hand: attention channels and fusion; R-GCN layers and
  // node embeddings.
  const std::size_t L = static_cast<std::size_t>(base.graph_layers);
  const std::map<std::string, std::size_t> own = {
      {"use_speaker_masking", 8 * d * d + 2 * (4 * d * d + d) + 2 * d * d + d},
      {"use_speaker_graph", L * (3 * d * d + d) + d},
      {"use_discourse_graph", L * (6 * d * d + d) + d + static_cast<std::size_t>(labels) * d}};
  bool pass = true;
  std::string detail;
  for (const auto& [flag, count] : own) {
    TrainConfig c = base;
    c.Set(flag, "false");
    const std::size_t ablated =
        SpeakerMrcModel(c.ToModelConfig(static_cast<int>(vocab.size()), labels), 1)
            .params()
            .TotalCount();
    const bool counted = full_count - ablated == count + 2 * d;
    const bool trains = FiniteAndDecreasing(Train(corpus, c).loss_log);
    pass = pass && counted && trains;
    detail += Format("%s -%zu%s%s ", flag.c_str() + 4, full_count - ablated,
                     counted ? "" : " (count mismatch)", trains ? "" : " (loss not decreasing)");
  }
  return {pass, detail};
}

// 8. Hand-scored metrics fixture.
Outcome Metrics() {
  const std::vector<Dialogue> corpus = LoadCorpus(testing::DataPath("metrics_fixture.json"));
  std::ifstream in(testing::DataPath("metrics_predictions.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  const EvalReport r = ScorePredictions(corpus, PredictionsFromJson(ss.str()));
  const bool pass = std::abs(r.em - 200.0 / 3.0) < 1e-12 && std::abs(r.f1 - 280.0 / 3.0) < 1e-12 &&
                    r.records.size() == 3 && std::abs(r.records[1].f1 - 0.8) < 1e-15 &&
                    r.records[2].em == 1.0 && r.num_unanswerable == 1;
  return {pass, r.Summary()};
}

// 9. Seeded determinism and checkpoint round trip.
Outcome Determinism() {
  const std::vector<Dialogue> corpus = Synthetic(3, 9);
  TrainConfig c = SmallConfig();
  c.max_steps = 20;
  c.encoder.dropout = 0.1;
  const TrainResult a = Train(corpus, c);
  const TrainResult b = Train(corpus, c);
  const bool same_log = LossLogToCsv(a.loss_log) == LossLogToCsv(b.loss_log);
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "spkmrc_acceptance_checkpoint.bin";
  SaveCheckpoint(a.checkpoint, path);
  const Checkpoint loaded = LoadCheckpoint(path);
  std::filesystem::remove(path);
  const EvalReport before = Evaluate(a.checkpoint, corpus).report;
  const EvalReport after = Evaluate(loaded, corpus).report;
  const bool same_report = before == after;
  return {same_log && same_report && loaded == a.checkpoint,
          Format("loss logs %s, checkpoint %s, report %s", same_log ? "identical" : "differ",
                 loaded == a.checkpoint ? "identical" : "differs",
                 same_report ? "identical" : "differs")};
}

// 10. Span decoding against exhaustive search.
Outcome DecodeOracle() {
  const std::vector<Dialogue> corpus = Synthetic(10, 10);
  const Vocabulary vocab = BuildVocabulary(corpus);
  std::vector<EncodedExample> examples;
  for (const Dialogue& d : corpus) {
    for (const Question& q : d.questions) examples.push_back(EncodeExample(d, q, vocab, 96));
  }
  std::mt19937_64 rng(11);
  std::normal_distribution<Real> normal(0.0, 1.0);
  std::uniform_real_distribution<Real> tau(-3.0, 3.0);
  int disagreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const EncodedExample& e = examples[rng() % examples.size()];
    std::vector<Real> start(e.length()), end(e.length());
    const Real null_boost = trial % 4 == 0 ? 3.0 : 0.0;
    for (std::size_t t = 0; t < e.length(); ++t) {
      start[t] = normal(rng);
      end[t] = normal(rng);
    }
    start[0] += null_boost;
    const int max_len = 1 + static_cast<int>(rng() % 30);
    const Real threshold = tau(rng);
    const DecodedAnswer a = DecodeAnswer(start, end, e, max_len, threshold);
    const testing::RefSpan r = testing::ReferenceDecode(start, end, e, max_len, threshold);
    const bool agree = a.no_answer == r.no_answer && a.start == r.start && a.end == r.end &&
                       a.best_span_score == r.best;
    disagreements += !agree;
  }
  return {disagreements == 0, Format("1000 random logit vectors, %d disagreements", disagreements)};
}

}  // namespace
}  // namespace spkmrc

int main(int argc, char** argv) {
  using namespace spkmrc;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", GradientFidelity},
      {"masked attention oracle", MaskedAttentionOracle},
      {"mask partition and relabel invariance", MaskPartitionAndRelabel},
      {"graph construction oracle", GraphConstruction},
      {"R-GCN oracle", RgcnOracle},
      {"end-to-end learnability", Learnability},
      {"ablation accounting", AblationAccounting},
      {"metrics fixture", Metrics},
      {"determinism and persistence", Determinism},
      {"span decode oracle", DecodeOracle},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int number = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", number,
                criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
