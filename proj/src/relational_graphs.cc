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

#include "spkmrc/relational_graphs.h"

#include <set>
#include <sstream>
#include <tuple>

#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

// Adds utterance nodes for surviving utterances and the global node. Returns
// the number of utterances that kept tokens in the window but lost their
// closing [SEP].
int AddUtteranceAndGlobalNodes(const EncodedExample& e, HeteroGraph& g) {
  int dropped = 0;
  std::vector<bool> has_tokens(e.num_utterances(), false);
  for (int u : e.utterance_of_token) {
    if (u != kNone) has_tokens[u] = true;
  }
  for (int i = 0; i < e.num_utterances(); ++i) {
    if (e.sep_position_of_utterance[i] != kNone) {
      g.nodes.push_back({NodeKind::kUtterance, i, kNone, ""});
    } else if (has_tokens[i]) {
      ++dropped;
    }
  }
  g.nodes.push_back({NodeKind::kGlobal, kNone, kNone, ""});
  return dropped;
}

void AddGlobalEdges(HeteroGraph& g, int type) {
  const int global = g.global_node();
  for (int v = 0; v < static_cast<int>(g.nodes.size()); ++v) {
    if (v != global) g.edges.push_back({global, v, type});
  }
}

}  // namespace

std::string GraphNode::KindString() const {
  switch (kind) {
    case NodeKind::kUtterance:
      return "UTTERANCE(" + std::to_string(utterance) + ")";
    case NodeKind::kRelation:
      return "RELATION(" + label + ")";
    case NodeKind::kGlobal:
      return "GLOBAL";
  }
  return "?";
}

int HeteroGraph::num_utterance_nodes() const {
  int count = 0;
  for (const GraphNode& n : nodes) {
    if (n.kind == NodeKind::kUtterance) ++count;
  }
  return count;
}

int HeteroGraph::global_node() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == NodeKind::kGlobal) return static_cast<int>(i);
  }
  return kNone;
}

std::size_t HeteroGraph::CountEdges(int type) const {
  std::size_t count = 0;
  for (const GraphEdge& edge : edges) {
    if (edge.type == type) ++count;
  }
  return count;
}

std::string HeteroGraph::ToText() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    os << "NODE " << i << ' ' << nodes[i].KindString() << '\n';
  }
  for (const GraphEdge& edge : edges) {
    os << "EDGE " << edge.src << ' ' << edge.dst << ' ' << edge_types.at(edge.type) << '\n';
  }
  return os.str();
}

HeteroGraph BuildSpeakerGraph(const EncodedExample& e) {
  HeteroGraph g;
  g.edge_types = {"SAME_SPEAKER", "GLOBAL_OUT"};
  g.warnings = AddUtteranceAndGlobalNodes(e, g);
  const int n = g.num_utterance_nodes();
  for (int i = 0; i < n; ++i) {
    const int si = e.speaker_of_utterance[g.nodes[i].utterance];
    for (int j = i + 1; j < n; ++j) {
      if (e.speaker_of_utterance[g.nodes[j].utterance] != si) continue;
      g.edges.push_back({i, j, speaker_edge::kSameSpeaker});
      g.edges.push_back({j, i, speaker_edge::kSameSpeaker});
    }
  }
  AddGlobalEdges(g, speaker_edge::kGlobalOut);
  return g;
}

HeteroGraph BuildDiscourseGraph(const EncodedExample& e) {
  HeteroGraph g;
  g.edge_types = {"SRC_TO_REL", "REL_TO_TGT", "REL_TO_SRC", "TGT_TO_REL", "GLOBAL_OUT"};
  g.warnings = AddUtteranceAndGlobalNodes(e, g);
  std::vector<int> node_of_utterance(e.num_utterances(), kNone);
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    if (g.nodes[v].kind == NodeKind::kUtterance) {
      node_of_utterance[g.nodes[v].utterance] = static_cast<int>(v);
    }
  }

  std::set<std::tuple<int, int, std::string>> seen;
  for (const EncodedRelation& r : e.relations) {
    const bool in_range = r.source >= 0 && r.source < e.num_utterances() &&
                          r.target >= 0 && r.target < e.num_utterances();
    if (!in_range || r.source == r.target || node_of_utterance[r.source] == kNone ||
        node_of_utterance[r.target] == kNone) {
      ++g.warnings;
      continue;
    }
    if (!seen.emplace(r.source, r.target, r.label).second) {
      ++g.warnings;
      continue;
    }
    const int src = node_of_utterance[r.source];
    const int dst = node_of_utterance[r.target];
    const int rel = static_cast<int>(g.nodes.size());
    g.nodes.push_back({NodeKind::kRelation, kNone, r.label_id, r.label});
    g.edges.push_back({src, rel, discourse_edge::kSourceToRelation});
    g.edges.push_back({rel, dst, discourse_edge::kRelationToTarget});
    g.edges.push_back({rel, src, discourse_edge::kRelationToSource});
    g.edges.push_back({dst, rel, discourse_edge::kTargetToRelation});
  }
  AddGlobalEdges(g, discourse_edge::kGlobalOut);
  return g;
}

RgcnParams MakeRgcnParams(ModelParams& params, const std::string& prefix,
                          const std::vector<std::string>& edge_types, int hidden,
                          int layers, int num_relation_labels, Real init_std,
                          std::mt19937_64& rng) {
  RgcnParams p;
  p.global_embedding = &params.AddNormal(prefix + ".global_embedding", 1, hidden, init_std, rng);
  if (num_relation_labels > 0) {
    p.relation_embedding = &params.AddNormal(prefix + ".relation_embedding",
                                             num_relation_labels, hidden, init_std, rng);
  }
  for (int l = 0; l < layers; ++l) {
    const std::string lp = prefix + ".layer" + std::to_string(l);
    RgcnLayerParams layer;
    for (const std::string& type : edge_types) {
      layer.w_relation.push_back(
          &params.AddNormal(lp + ".W_" + type, hidden, hidden, init_std, rng));
    }
    layer.w_self = &params.AddNormal(lp + ".W_self", hidden, hidden, init_std, rng);
    layer.bias = &params.Add(lp + ".bias", 1, hidden);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::size_t RgcnParamCount(int num_edge_types, int hidden, int layers,
                           int num_relation_labels) {
  const std::size_t d = static_cast<std::size_t>(hidden);
  return d + static_cast<std::size_t>(num_relation_labels) * d +
         static_cast<std::size_t>(layers) *
             ((static_cast<std::size_t>(num_edge_types) + 1) * d * d + d);
}

std::vector<Tensor> NormalizedAdjacency(const HeteroGraph& g) {
  const std::size_t v = g.num_nodes();
  std::vector<Tensor> adjacency(g.edge_types.size(), Tensor(v, v));
  // in_degree[r][i] = |N_i^r|
  std::vector<std::vector<int>> in_degree(g.edge_types.size(), std::vector<int>(v, 0));
  for (const GraphEdge& edge : g.edges) ++in_degree[edge.type][edge.dst];
  for (const GraphEdge& edge : g.edges) {
    adjacency[edge.type](edge.dst, edge.src) += 1.0 / in_degree[edge.type][edge.dst];
  }
  return adjacency;
}

Var InitNodeStates(const Var& h, const HeteroGraph& g, const EncodedExample& e,
                   const RgcnParams& p) {
  Tape& tape = *h.tape();
  std::vector<int> sep_rows;
  std::vector<int> label_ids;
  // Row of every node inside concat_rows(utterance rows, global, relations).
  std::vector<int> order(g.num_nodes());
  std::vector<std::size_t> utterance_slot, relation_slot, global_slot;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const GraphNode& node = g.nodes[v];
    switch (node.kind) {
      case NodeKind::kUtterance: {
        const int sep = node.utterance >= 0 && node.utterance < e.num_utterances()
                            ? e.sep_position_of_utterance[node.utterance]
                            : kNone;
        if (sep == kNone) {
          throw MissingSep("utterance " + std::to_string(node.utterance) +
                           " has no [SEP] inside the window");
        }
        utterance_slot.push_back(v);
        sep_rows.push_back(sep);
        break;
      }
      case NodeKind::kRelation:
        relation_slot.push_back(v);
        label_ids.push_back(node.relation_label);
        break;
      case NodeKind::kGlobal:
        global_slot.push_back(v);
        break;
    }
  }
  if (global_slot.size() != 1) throw ShapeError("graph must have exactly one global node");
  if (!relation_slot.empty() && p.relation_embedding == nullptr) {
    throw ShapeError("graph has relation nodes but no relation embedding table");
  }

  std::vector<Var> parts;
  std::size_t row = 0;
  if (!sep_rows.empty()) {
    parts.push_back(gather_rows(h, sep_rows));
    for (std::size_t v : utterance_slot) order[v] = static_cast<int>(row++);
  }
  parts.push_back(tape.Param(*p.global_embedding));
  order[global_slot[0]] = static_cast<int>(row++);
  if (!label_ids.empty()) {
    parts.push_back(gather_rows(tape.Param(*p.relation_embedding), label_ids));
    for (std::size_t v : relation_slot) order[v] = static_cast<int>(row++);
  }
  Var stacked = parts.size() == 1 ? parts[0] : concat_rows(parts);
  bool identity = true;
  for (std::size_t v = 0; v < order.size(); ++v) identity = identity && order[v] == static_cast<int>(v);
  return identity ? stacked : gather_rows(stacked, order);
}

Var RgcnLayer(const std::vector<Tensor>& adjacency, const Var& states,
              const RgcnLayerParams& p) {
  Tape& tape = *states.tape();
  const std::size_t v = states.rows();
  if (adjacency.size() != p.w_relation.size()) {
    throw ShapeError("rgcn_layer: " + std::to_string(adjacency.size()) +
                     " edge types but " + std::to_string(p.w_relation.size()) +
                     " relation weights");
  }
  Var out = add(matmul(states, tape.Param(*p.w_self)), tape.Param(*p.bias));
  for (std::size_t r = 0; r < adjacency.size(); ++r) {
    const Tensor& a = adjacency[r];
    if (a.rows() != v || a.cols() != v) {
      throw ShapeError("rgcn_layer: adjacency " + a.ShapeString() + " for " +
                       std::to_string(v) + " nodes");
    }
    bool any = false;
    for (Real x : a.data()) {
      if (x != 0.0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    Var messages = matmul(tape.Constant(a), states);
    out = add(out, matmul(messages, tape.Param(*p.w_relation[r])));
  }
  return relu(out);
}

Var RgcnLayer(const HeteroGraph& g, const Var& states, const RgcnLayerParams& p) {
  if (states.rows() != g.num_nodes()) {
    throw ShapeError("rgcn_layer: states " + states.value().ShapeString() + " for " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  return RgcnLayer(NormalizedAdjacency(g), states, p);
}

GraphOutput RunGraph(const HeteroGraph& g, const Var& h, const EncodedExample& e,
                     const RgcnParams& p) {
  Var states = InitNodeStates(h, g, e, p);
  if (!p.layers.empty()) {
    const std::vector<Tensor> adjacency = NormalizedAdjacency(g);
    for (const RgcnLayerParams& layer : p.layers) states = RgcnLayer(adjacency, states, layer);
  }
  std::vector<int> utterance_rows;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    if (g.nodes[v].kind == NodeKind::kUtterance) utterance_rows.push_back(static_cast<int>(v));
  }
  GraphOutput out;
  out.states = states;
  out.utterances = gather_rows(states, utterance_rows);
  const int global = g.global_node();
  out.global = slice_rows(states, global, global + 1);
  return out;
}

Var BroadcastToTokens(const GraphOutput& output, const HeteroGraph& g,
                      const EncodedExample& e) {
  std::vector<int> node_of_utterance(e.num_utterances(), kNone);
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const GraphNode& node = g.nodes[v];
    if (node.kind == NodeKind::kUtterance && node.utterance >= 0 &&
        node.utterance < e.num_utterances()) {
      node_of_utterance[node.utterance] = static_cast<int>(v);
    }
  }
  const int global = g.global_node();
  std::vector<int> rows(e.length(), global);
  for (std::size_t t = 0; t < e.length(); ++t) {
    const int u = e.utterance_of_token[t];
    if (u != kNone && node_of_utterance[u] != kNone) rows[t] = node_of_utterance[u];
  }
  return gather_rows(output.states, rows);
}

}  // namespace spkmrc
