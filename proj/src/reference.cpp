// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/reference.hpp"

#include <algorithm>
#include <stdexcept>

namespace bandgnn::reference {

namespace {

void check_operands(std::size_t num_nodes, std::size_t num_types, const DenseArray<double>& e,
                    const DenseArray<double>& w, const DenseArray<double>& bias) {
  if (e.rank() != 2 || e.dim(0) != num_nodes) {
    throw std::invalid_argument("reference: embeddings must be [N, H], got " + shape_string(e.shape()));
  }
  const std::size_t H = e.dim(1);
  if (w.shape() != Shape{num_types * H, H}) {
    throw std::invalid_argument("reference: edge weights must be [P*H, H], got " + shape_string(w.shape()));
  }
  if (bias.shape() != Shape{num_types, H}) {
    throw std::invalid_argument("reference: bias must be [P, H], got " + shape_string(bias.shape()));
  }
}

}  // namespace

SparseAdjacency SparseAdjacency::from_edges(std::int32_t num_nodes, std::int32_t num_edge_types,
                                            const std::vector<Edge>& edges) {
  SparseAdjacency adj;
  adj.num_nodes = num_nodes;
  adj.by_type.resize(static_cast<std::size_t>(num_edge_types));
  for (const Edge& e : edges) {
    if (e.type < 0 || e.type >= num_edge_types || e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes) {
      throw std::invalid_argument("SparseAdjacency: edge out of range");
    }
    adj.by_type[static_cast<std::size_t>(e.type)].emplace_back(e.dst, e.src);
  }
  for (auto& list : adj.by_type) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

std::size_t SparseAdjacency::num_edges() const {
  std::size_t n = 0;
  for (const auto& list : by_type) n += list.size();
  return n;
}

DenseArray<double> dense_adjacency(std::int32_t num_nodes, std::int32_t num_edge_types, const std::vector<Edge>& edges) {
  const auto N = static_cast<std::size_t>(num_nodes);
  DenseArray<double> a({static_cast<std::size_t>(num_edge_types), N, N});
  for (const Edge& e : edges) {
    a.at({static_cast<std::size_t>(e.type), static_cast<std::size_t>(e.dst), static_cast<std::size_t>(e.src)}) = 1.0;
  }
  return a;
}

DenseArray<double> sparse_incoming(const SparseAdjacency& adj, const DenseArray<double>& e,
                                   const DenseArray<double>& w, const DenseArray<double>& bias) {
  const auto N = static_cast<std::size_t>(adj.num_nodes);
  const std::size_t P = adj.by_type.size();
  check_operands(N, P, e, w, bias);
  const std::size_t H = e.dim(1);

  DenseArray<double> incoming({N, H});
  std::vector<double> message(H);
  for (std::size_t p = 0; p < P; ++p) {
    const double* wp = w.data() + p * H * H;
    const double* bp = bias.data() + p * H;
    for (const auto& [dst, src] : adj.by_type[p]) {
      const double* es = e.data() + static_cast<std::size_t>(src) * H;
      for (std::size_t h = 0; h < H; ++h) message[h] = bp[h];
      for (std::size_t k = 0; k < H; ++k) {
        for (std::size_t h = 0; h < H; ++h) message[h] += es[k] * wp[k * H + h];
      }
      multiply_add_counter() += H * H;
      double* out = incoming.data() + static_cast<std::size_t>(dst) * H;
      for (std::size_t h = 0; h < H; ++h) out[h] += message[h];
    }
  }
  return incoming;
}

DenseArray<double> sparse_step(const SparseAdjacency& adj, const DenseArray<double>& e,
                               const DenseArray<double>& w, const DenseArray<double>& bias,
                               const GruParams<double>& gru) {
  return gru_cell(sparse_incoming(adj, e, w, bias), e, gru);
}

DenseArray<double> dense_incoming(const DenseArray<double>& a, const DenseArray<double>& e,
                                  const DenseArray<double>& w, const DenseArray<double>& bias) {
  if (a.rank() != 3 || a.dim(1) != a.dim(2)) {
    throw std::invalid_argument("reference: adjacency must be [P, N, N], got " + shape_string(a.shape()));
  }
  const std::size_t P = a.dim(0);
  const std::size_t N = a.dim(1);
  check_operands(N, P, e, w, bias);
  const std::size_t H = e.dim(1);

  DenseArray<double> incoming({N, H});
  std::vector<double> ae(N * H);
  for (std::size_t p = 0; p < P; ++p) {
    const double* ap = a.data() + p * N * N;
    // A_p E
    std::fill(ae.begin(), ae.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t h = 0; h < H; ++h) ae[i * H + h] += ap[i * N + j] * e[j * H + h];
      }
    }
    // (A_p E) W_p + (A_p 1) b_p^T
    const double* wp = w.data() + p * H * H;
    for (std::size_t i = 0; i < N; ++i) {
      double degree = 0.0;
      for (std::size_t j = 0; j < N; ++j) degree += ap[i * N + j];
      for (std::size_t h = 0; h < H; ++h) {
        double acc = degree * bias[p * H + h];
        for (std::size_t k = 0; k < H; ++k) acc += ae[i * H + k] * wp[k * H + h];
        incoming[i * H + h] += acc;
      }
    }
    multiply_add_counter() += N * N * H + N * H * H;
  }
  return incoming;
}

DenseArray<double> dense_step(const DenseArray<double>& a, const DenseArray<double>& e,
                              const DenseArray<double>& w, const DenseArray<double>& bias,
                              const GruParams<double>& gru) {
  return gru_cell(dense_incoming(a, e, w, bias), e, gru);
}

}  // namespace bandgnn::reference
