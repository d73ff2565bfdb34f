// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// One-time per-graph preprocessing: reachability pruning, Reverse
// Cuthill-McKee reordering, dataset filtering and the analytic cost model.

#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "bandgnn/graph.hpp"

namespace bandgnn {

struct CompiledGraph {
  Graph graph;               // reduced and permuted
  Permutation perm;          // reduced order -> compiled order
  std::vector<NodeId> kept;  // original ids of the surviving nodes, ascending
  std::int32_t bandwidth = 0;
  std::int32_t original_num_nodes = 0;
  std::int32_t original_bandwidth = 0;  // reduced graph, provided ordering
};

struct CostEstimate {
  double banded_cost = 0;  // 3*N*B*H multiply-adds
  double dense_cost = 0;   // N^2*H multiply-adds
  std::int64_t memory_nodes = 0;
};

/// Keeps the nodes with a directed path of length <= steps to some
/// candidate, plus the hole. Survivors keep their relative order. When
/// `kept` is non-null it receives the original ids of the survivors.
Graph reachability_reduce(const Graph& graph, std::int32_t steps, std::vector<NodeId>* kept = nullptr);

/// Classic RCMK on the symmetrized union of all edge types.
///
/// Components are started in turn from the unvisited node of minimum
/// degree (lowest index on ties); BFS enqueues neighbours by ascending
/// degree, then index. The concatenated Cuthill-McKee order is reversed.
Permutation rcmk_order(const Graph& graph);

/// reachability_reduce -> rcmk_order -> apply_permutation. The RCMK order is
/// only taken when it does not increase the bandwidth of the provided
/// ordering; otherwise the identity is recorded.
CompiledGraph compile(const Graph& graph, std::int32_t steps);

/// Compiles every graph; per-graph output is independent of `threads`.
std::vector<CompiledGraph> compile_all(const std::vector<Graph>& graphs, std::int32_t steps, int threads);

/// Exact minimum bandwidth by enumeration. Test oracle, num_nodes <= 9.
std::pair<Permutation, std::int32_t> min_bandwidth_bruteforce(const Graph& graph);

CostEstimate cost_estimate(std::int64_t num_nodes, std::int64_t bandwidth, std::int64_t hidden,
                           std::int64_t block_size, std::int64_t edge_types, std::int64_t steps,
                           std::int64_t bytes_per_scalar, std::int64_t byte_budget);

struct BandwidthBelow {
  std::int64_t bound = std::numeric_limits<std::int64_t>::max();
};
struct OrderBelow {
  std::int64_t bound = std::numeric_limits<std::int64_t>::max();
};
using FilterCriterion = std::variant<BandwidthBelow, OrderBelow>;

struct FilterResult {
  std::vector<CompiledGraph> graphs;
  double retained_fraction = 1.0;  // 1.0 for empty input
};

FilterResult filter_dataset(const std::vector<CompiledGraph>& graphs, const FilterCriterion& criterion);
bool matches(const CompiledGraph& graph, const FilterCriterion& criterion);

}  // namespace bandgnn
