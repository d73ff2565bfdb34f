// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace bandgnn {

Permutation::Permutation(std::vector<NodeId> mapping) : mapping_(std::move(mapping)) {
  std::vector<char> seen(mapping_.size(), 0);
  for (NodeId v : mapping_) {
    if (v < 0 || static_cast<std::size_t>(v) >= mapping_.size() || seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("permutation is not a bijection");
    }
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

Permutation Permutation::identity(std::int32_t n) {
  std::vector<NodeId> m(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return Permutation(std::move(m));
}

Permutation Permutation::from_order(const std::vector<NodeId>& order) {
  std::vector<NodeId> m(order.size(), -1);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (order[pos] < 0 || static_cast<std::size_t>(order[pos]) >= order.size()) {
      throw std::invalid_argument("permutation is not a bijection");
    }
    m[static_cast<std::size_t>(order[pos])] = static_cast<NodeId>(pos);
  }
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<NodeId> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) {
    inv[static_cast<std::size_t>(mapping_[i])] = static_cast<NodeId>(i);
  }
  Permutation p;
  p.mapping_ = std::move(inv);
  return p;
}

std::optional<std::string> validate(const Graph& g) {
  if (g.num_nodes <= 0) return "num_nodes must be positive";
  if (g.num_edge_types <= 0) return "num_edge_types must be positive";
  auto in_range = [&](NodeId v) { return v >= 0 && v < g.num_nodes; };

  std::set<std::tuple<EdgeType, NodeId, NodeId>> seen;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& edge = g.edges[e];
    if (!in_range(edge.src) || !in_range(edge.dst)) {
      std::ostringstream os;
      os << "node index out of range in edge " << e << " (" << edge.src << "->" << edge.dst << ")";
      return os.str();
    }
    if (edge.type < 0 || edge.type >= g.num_edge_types) {
      std::ostringstream os;
      os << "edge type out of range in edge " << e << " (type " << edge.type << ")";
      return os.str();
    }
    if (!seen.emplace(edge.type, edge.src, edge.dst).second) {
      std::ostringstream os;
      os << "duplicate edge " << e << " (type " << edge.type << ", " << edge.src << "->" << edge.dst << ")";
      return os.str();
    }
  }
  if (!in_range(g.hole)) return "node index out of range (hole)";
  if (g.candidates.empty()) return "candidates must be nonempty";
  std::set<NodeId> cands;
  for (NodeId c : g.candidates) {
    if (!in_range(c)) return "node index out of range (candidate)";
    if (c == g.hole) return "hole must not be a candidate";
    if (!cands.insert(c).second) return "duplicate candidate";
  }
  if (g.label < 0 || static_cast<std::size_t>(g.label) >= g.candidates.size()) return "label out of range";
  if (!g.node_features.empty()) {
    if (g.node_features.size() != static_cast<std::size_t>(g.num_nodes)) return "node_features length must equal num_nodes";
    for (auto f : g.node_features) {
      if (f < 0) return "node feature ids must be nonnegative";
    }
  }
  return std::nullopt;
}

void validate_or_throw(const Graph& graph) {
  if (auto err = validate(graph)) throw std::invalid_argument(*err);
}

Graph apply_permutation(const Graph& g, const Permutation& perm) {
  if (perm.size() != g.num_nodes) {
    throw std::invalid_argument("permutation length does not match num_nodes");
  }
  Graph out;
  out.num_nodes = g.num_nodes;
  out.num_edge_types = g.num_edge_types;
  out.edges.reserve(g.edges.size());
  for (const Edge& e : g.edges) out.edges.push_back({e.type, perm[e.src], perm[e.dst]});
  out.hole = perm[g.hole];
  out.candidates.reserve(g.candidates.size());
  for (NodeId c : g.candidates) out.candidates.push_back(perm[c]);
  out.label = g.label;
  if (!g.node_features.empty()) {
    out.node_features.resize(g.node_features.size());
    for (NodeId v = 0; v < g.num_nodes; ++v) {
      out.node_features[static_cast<std::size_t>(perm[v])] = g.node_features[static_cast<std::size_t>(v)];
    }
  }
  return out;
}

std::int32_t compute_bandwidth(const std::vector<Edge>& edges) {
  std::int32_t bw = 0;
  for (const Edge& e : edges) bw = std::max(bw, std::abs(e.dst - e.src));
  return bw;
}

std::int32_t compute_bandwidth(const Graph& graph) { return compute_bandwidth(graph.edges); }

}  // namespace bandgnn
