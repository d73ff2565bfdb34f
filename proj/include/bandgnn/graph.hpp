// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-relational instance graphs, node permutations and bandwidth.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bandgnn {

using NodeId = std::int32_t;
using EdgeType = std::int32_t;

/// Directed typed edge. Message flows src -> dst, so the transposed
/// adjacency of type `type` has a one at (dst, src).
struct Edge {
  EdgeType type = 0;
  NodeId src = 0;
  NodeId dst = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One supervised instance: a graph with a hole node, a set of candidate
/// nodes and the index (into `candidates`) of the correct one.
struct Graph {
  std::int32_t num_nodes = 0;
  std::int32_t num_edge_types = 1;
  std::vector<Edge> edges;
  NodeId hole = 0;
  std::vector<NodeId> candidates;
  std::int32_t label = 0;
  std::vector<std::int32_t> node_features;  // empty means all zeros

  std::int32_t feature(NodeId n) const {
    return node_features.empty() ? 0 : node_features[static_cast<std::size_t>(n)];
  }

  friend bool operator==(const Graph&, const Graph&) = default;
};

/// Bijection old index -> new index.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<NodeId> mapping);

  static Permutation identity(std::int32_t n);
  /// Builds the permutation that places order[i] at position i.
  static Permutation from_order(const std::vector<NodeId>& order);

  std::int32_t size() const { return static_cast<std::int32_t>(mapping_.size()); }
  NodeId operator[](NodeId old_index) const { return mapping_[static_cast<std::size_t>(old_index)]; }
  const std::vector<NodeId>& mapping() const { return mapping_; }
  Permutation inverse() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<NodeId> mapping_;
};

/// Returns std::nullopt when every invariant holds, otherwise a message
/// naming the first violated one.
std::optional<std::string> validate(const Graph& graph);

/// Throws std::invalid_argument with the validate() message.
void validate_or_throw(const Graph& graph);

Graph apply_permutation(const Graph& graph, const Permutation& perm);

/// max |dst - src| over all edges of all types; 0 without edges.
std::int32_t compute_bandwidth(const Graph& graph);
std::int32_t compute_bandwidth(const std::vector<Edge>& edges);

}  // namespace bandgnn
