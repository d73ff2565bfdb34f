// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Correctness oracles for the propagation step. Both are double precision,
// single-threaded and share nothing with the banded path except gru_cell.

#pragma once

#include <utility>
#include <vector>

#include "bandgnn/dense_array.hpp"
#include "bandgnn/graph.hpp"
#include "bandgnn/kernels.hpp"

namespace bandgnn::reference {

/// Per edge type, (dst, src) pairs sorted and deduplicated.
struct SparseAdjacency {
  std::int32_t num_nodes = 0;
  std::vector<std::vector<std::pair<NodeId, NodeId>>> by_type;

  static SparseAdjacency from_edges(std::int32_t num_nodes, std::int32_t num_edge_types, const std::vector<Edge>& edges);
  std::size_t num_edges() const;
};

/// Dense [P, N, N] transposed adjacency: A[p, dst, src] = 1.
DenseArray<double> dense_adjacency(std::int32_t num_nodes, std::int32_t num_edge_types, const std::vector<Edge>& edges);

/// Messages before the GRU: gather e_src, transform by W_type, add b_type,
/// scatter-add into dst. Returns [N, H].
DenseArray<double> sparse_incoming(const SparseAdjacency& adj, const DenseArray<double>& embeddings,
                                   const DenseArray<double>& edge_weights, const DenseArray<double>& bias);

DenseArray<double> sparse_step(const SparseAdjacency& adj, const DenseArray<double>& embeddings,
                               const DenseArray<double>& edge_weights, const DenseArray<double>& bias,
                               const GruParams<double>& gru);

/// Messages before the GRU: sum_p A_p (E W_p + 1 b_p^T) with full N x N
/// matrices. Returns [N, H].
DenseArray<double> dense_incoming(const DenseArray<double>& adjacency, const DenseArray<double>& embeddings,
                                  const DenseArray<double>& edge_weights, const DenseArray<double>& bias);

DenseArray<double> dense_step(const DenseArray<double>& adjacency, const DenseArray<double>& embeddings,
                              const DenseArray<double>& edge_weights, const DenseArray<double>& bias,
                              const GruParams<double>& gru);

}  // namespace bandgnn::reference
