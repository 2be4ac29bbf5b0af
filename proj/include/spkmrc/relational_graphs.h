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

// Speaker and discourse graphs over utterances, relational graph convolution
// and the broadcast of utterance vectors back onto tokens.

#ifndef SPKMRC_RELATIONAL_GRAPHS_H_
#define SPKMRC_RELATIONAL_GRAPHS_H_

#include <compare>
#include <random>
#include <string>
#include <vector>

#include "spkmrc/autodiff.h"
#include "spkmrc/corpus.h"
#include "spkmrc/params.h"

namespace spkmrc {

enum class NodeKind { kUtterance, kRelation, kGlobal };

struct GraphNode {
  NodeKind kind = NodeKind::kUtterance;
  int utterance = kNone;       // kUtterance only
  int relation_label = kNone;  // kRelation only: vocabulary relation id
  std::string label;           // kRelation only

  // "UTTERANCE(3)", "RELATION(QAP)" or "GLOBAL".
  std::string KindString() const;
  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  int type = 0;
  auto operator<=>(const GraphEdge&) const = default;
};

// Edge types of the speaker graph.
namespace speaker_edge {
inline constexpr int kSameSpeaker = 0;
inline constexpr int kGlobalOut = 1;
inline constexpr int kCount = 2;
}  // namespace speaker_edge

// Edge types of the discourse graph. Relation semantics live in the relation
// node's embedding; these ids only encode the role of an edge.
namespace discourse_edge {
inline constexpr int kSourceToRelation = 0;
inline constexpr int kRelationToTarget = 1;
inline constexpr int kRelationToSource = 2;
inline constexpr int kTargetToRelation = 3;
inline constexpr int kGlobalOut = 4;
inline constexpr int kCount = 5;
}  // namespace discourse_edge

// Utterance nodes come first (0..n-1, in utterance order), then the global
// node, then relation nodes.
struct HeteroGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<std::string> edge_types;
  // Dropped utterances, relations and duplicate relations.
  int warnings = 0;

  std::size_t num_nodes() const { return nodes.size(); }
  int num_utterance_nodes() const;
  int global_node() const;
  std::size_t CountEdges(int type) const;
  // One "NODE <id> <kind>" line per node, then one "EDGE <src> <dst> <type>"
  // line per edge, in storage order.
  std::string ToText() const;
};

// Nodes for the utterances whose closing [SEP] survived truncation, plus a
// global node. SAME_SPEAKER edges both ways between every same-speaker pair;
// GLOBAL_OUT from the global node to every utterance. Self-connections come
// from the W_0 term of the layer, not from edges.
HeteroGraph BuildSpeakerGraph(const EncodedExample& example);

// Per relation (i, j, label): i->rel, rel->j, rel->i, j->rel. The global node
// reaches every other node. Relations touching a dropped utterance and
// duplicate (i, j, label) triples are skipped and counted in `warnings`.
HeteroGraph BuildDiscourseGraph(const EncodedExample& example);

struct RgcnLayerParams {
  std::vector<Parameter*> w_relation;  // one D x D per edge type
  Parameter* w_self = nullptr;         // D x D
  Parameter* bias = nullptr;           // 1 x D
};

struct RgcnParams {
  std::vector<RgcnLayerParams> layers;
  Parameter* global_embedding = nullptr;    // 1 x D
  Parameter* relation_embedding = nullptr;  // labels x D; null when unused
};

// num_relation_labels == 0 creates no relation embedding table.
RgcnParams MakeRgcnParams(ModelParams& params, const std::string& prefix,
                          const std::vector<std::string>& edge_types, int hidden,
                          int layers, int num_relation_labels, Real init_std,
                          std::mt19937_64& rng);
std::size_t RgcnParamCount(int num_edge_types, int hidden, int layers,
                           int num_relation_labels);

// Per edge type r: the |V| x |V| matrix with A_r[i][j] = 1 / |N_i^r| for each
// in-neighbour j of i under r.
std::vector<Tensor> NormalizedAdjacency(const HeteroGraph& graph);

// Utterance node i <- H[sep_i]; relation node <- its label embedding; global
// node <- the global embedding. Throws MissingSep if an utterance node's
// [SEP] is not in the window.
Var InitNodeStates(const Var& h, const HeteroGraph& graph, const EncodedExample& example,
                   const RgcnParams& p);

// h_i' = ReLU(sum_r sum_{j in N_i^r} (1 / c_{i,r}) h_j W_r + h_i W_0 + b).
Var RgcnLayer(const HeteroGraph& graph, const Var& states, const RgcnLayerParams& p);
// Same, with precomputed NormalizedAdjacency(graph).
Var RgcnLayer(const std::vector<Tensor>& adjacency, const Var& states,
              const RgcnLayerParams& p);

struct GraphOutput {
  Var states;      // |V| x D after the last layer
  Var utterances;  // rows of the utterance nodes, in order
  Var global;      // 1 x D
};

GraphOutput RunGraph(const HeteroGraph& graph, const Var& h, const EncodedExample& example,
                     const RgcnParams& p);

// L x D: a token of utterance i gets that utterance's node row; CLS,
// question tokens, padding, and tokens of utterances without a node get the
// global node row.
Var BroadcastToTokens(const GraphOutput& output, const HeteroGraph& graph,
                      const EncodedExample& example);

}  // namespace spkmrc

#endif  // SPKMRC_RELATIONAL_GRAPHS_H_
