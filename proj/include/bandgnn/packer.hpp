// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sparse batching of instance graphs into fixed-budget supergraphs and
// extraction of the dense block-banded C/U/L representation.

#pragma once

#include <cstdint>
#include <vector>

#include "bandgnn/compiler.hpp"
#include "bandgnn/dense_array.hpp"
#include "bandgnn/graph.hpp"

namespace bandgnn {

/// One instance graph inside a supergraph; node ids are global.
struct SupergraphMember {
  std::size_t id = 0;
  NodeId offset = 0;
  std::int32_t num_nodes = 0;
  NodeId hole = 0;
  std::vector<NodeId> candidates;
  std::int32_t label = 0;
};

/// Disjoint union of member graphs, padded with isolated feature-0 nodes
/// to a multiple of the block size.
struct Supergraph {
  std::int32_t num_nodes = 0;
  std::int32_t num_edge_types = 1;
  std::int32_t block_size = 1;
  std::int32_t node_budget = 0;
  std::vector<Edge> edges;
  std::vector<std::int32_t> node_features;
  std::vector<SupergraphMember> members;

  std::int32_t num_blocks() const { return num_nodes / block_size; }
  std::int32_t used_nodes() const;
};

/// Packs `graphs` in order: a graph joins the current supergraph when it
/// fits the remaining budget, otherwise a new supergraph is started.
/// `ids` (defaults to positions) label the members.
std::vector<Supergraph> pack_supergraphs(const std::vector<const Graph*>& graphs, std::int32_t node_budget,
                                         std::int32_t block_size, const std::vector<std::size_t>& ids = {});
std::vector<Supergraph> pack_supergraphs(const std::vector<CompiledGraph>& graphs, std::int32_t node_budget,
                                         std::int32_t block_size);

/// A supergraph holding exactly `graph`, padded to a multiple of block_size.
Supergraph single_supergraph(const Graph& graph, std::int32_t block_size, std::size_t id = 0);

/// Edge counts by distance class |dst - src| relative to the block size.
struct CoverageReport {
  std::int64_t always_covered = 0;  // |i-j| < S
  std::int64_t maybe_covered = 0;   // S <= |i-j| < 2S
  std::int64_t never_covered = 0;   // |i-j| >= 2S
  std::int64_t actually_dropped = 0;
};

/// Per-type transposed adjacency in block tridiagonal form. Row z = s*P + p
/// of a [S*P, S] block holds the type-p row of local destination node s.
template <typename T>
struct BandedBlocks {
  std::int32_t num_blocks = 0;
  std::int32_t block_size = 0;
  std::int32_t num_edge_types = 0;
  DenseArray<T> diagonal;  // C: [K, S*P, S]
  DenseArray<T> upper;     // U: [K-1, S*P, S], source block k+1 -> destination block k
  DenseArray<T> lower;     // L: [K-1, S*P, S], source block k -> destination block k+1
  DenseArray<T> in_degree; // [K*S, P], retained in-degree per type
  std::vector<Edge> dropped_edges;
  std::int64_t retained_edges = 0;

  std::int32_t num_nodes() const { return num_blocks * block_size; }
};

template <typename T>
struct BandedExtraction {
  BandedBlocks<T> blocks;
  CoverageReport coverage;
};

template <typename T>
BandedExtraction<T> extract_banded(const Supergraph& sg, std::int32_t block_size);

/// Retained edges recovered from the blocks, sorted.
template <typename T>
std::vector<Edge> reconstruct_edges(const BandedBlocks<T>& blocks);

/// True iff the block-index rule keeps edge src -> dst at block size S.
bool edge_retained(NodeId src, NodeId dst, std::int32_t block_size);

}  // namespace bandgnn
