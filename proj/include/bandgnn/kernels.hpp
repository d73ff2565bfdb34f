// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense compute runtime: batched matrix multiplication, the GRU cell and
// the block-banded propagation step. Every matrix product goes through the
// instrumented multiply-add counter.

#pragma once

#include <cstdint>
#include <limits>

#include "bandgnn/dense_array.hpp"
#include "bandgnn/packer.hpp"

namespace bandgnn {

// ---------------------------------------------------------------------------
// Instrumentation

/// Per-thread running total of multiply-adds executed by the kernels and
/// the reference oracles.
std::uint64_t& multiply_add_counter();

/// Reads the multiply-adds executed on this thread since construction.
class MultiplyAddScope {
 public:
  MultiplyAddScope() : start_(multiply_add_counter()) {}
  std::uint64_t count() const { return multiply_add_counter() - start_; }

 private:
  std::uint64_t start_;
};

/// Analytic multiply-add count of one banded propagation step: the three
/// adjacency BMMs, the edge-weight contraction and the six GRU products.
std::uint64_t banded_step_multiply_adds(std::uint64_t K, std::uint64_t S, std::uint64_t P, std::uint64_t H);
/// The adjacency part alone, K*(S*P)*S*H*(3 - 2/K).
std::uint64_t banded_adjacency_multiply_adds(std::uint64_t K, std::uint64_t S, std::uint64_t P, std::uint64_t H);
/// Full densification: P dense N x N products, P edge-weight products, GRU.
std::uint64_t dense_step_multiply_adds(std::uint64_t N, std::uint64_t P, std::uint64_t H);
/// Scatter/gather: one H x H transform per edge, GRU.
std::uint64_t sparse_step_multiply_adds(std::uint64_t N, std::uint64_t num_edges, std::uint64_t H);
std::uint64_t gru_multiply_adds(std::uint64_t rows, std::uint64_t H);

// ---------------------------------------------------------------------------
// Batched matrix multiplication

/// View of `batch` row-major rows x cols matrices stored back to back.
template <typename T>
struct MatrixBatch {
  T* data = nullptr;
  std::size_t batch = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  T* matrix(std::size_t b) const { return data + b * rows * cols; }
};

/// Treats the last two axes as the matrix and flattens the rest into the
/// batch; `first`/`count` select a contiguous range of batch entries.
template <typename T>
MatrixBatch<const T> batch_view(const DenseArray<T>& a, std::size_t first = 0,
                                std::size_t count = std::numeric_limits<std::size_t>::max());
template <typename T>
MatrixBatch<T> batch_view(DenseArray<T>& a, std::size_t first = 0,
                          std::size_t count = std::numeric_limits<std::size_t>::max());

/// out[b] += a[b] * b[b]
template <typename T>
void bmm_accumulate(MatrixBatch<T> out, MatrixBatch<const T> a, MatrixBatch<const T> b);
/// out[b] += a[b]^T * b[b]  (adjoint helper)
template <typename T>
void bmm_tn_accumulate(MatrixBatch<T> out, MatrixBatch<const T> a, MatrixBatch<const T> b);
/// out[b] += a[b] * b[b]^T  (adjoint helper)
template <typename T>
void bmm_nt_accumulate(MatrixBatch<T> out, MatrixBatch<const T> a, MatrixBatch<const T> b);

/// [..., m, k] x [..., k, n] -> [..., m, n], independent product per batch
/// index, no implicit transposition.
template <typename T>
DenseArray<T> bmm(const DenseArray<T>& a, const DenseArray<T>& b);

/// [..., k] x [k, n] -> [..., n]: one matrix applied to every leading row.
template <typename T>
DenseArray<T> contract_last(const DenseArray<T>& a, const DenseArray<T>& w);

// ---------------------------------------------------------------------------
// GRU cell

/// Row-vector convention: for message row m and state row h,
///   r  = sigmoid(m W_r + h U_r + b_r)
///   z  = sigmoid(m W_z + h U_z + b_z)
///   c  = tanh(m W_h + (r . h) U_h + b_h)
///   h' = (1 - z) . h + z . c
template <typename T>
struct GruParams {
  DenseArray<T> w_r, w_z, w_h;  // [H, H]
  DenseArray<T> u_r, u_z, u_h;  // [H, H]
  DenseArray<T> b_r, b_z, b_h;  // [H]

  static GruParams zeros(std::size_t hidden);
  std::size_t hidden() const { return b_r.size(); }
};

/// Intermediates kept for the backward pass, each [rows, H].
template <typename T>
struct GruCache {
  DenseArray<T> reset;
  DenseArray<T> update;
  DenseArray<T> candidate;
  DenseArray<T> reset_state;  // r . h
};

template <typename T>
DenseArray<T> gru_cell(const DenseArray<T>& messages, const DenseArray<T>& state, const GruParams<T>& params,
                       GruCache<T>* cache = nullptr);

/// Adjoint of gru_cell. Accumulates parameter gradients into `grads` and
/// returns (d messages, d state).
template <typename T>
std::pair<DenseArray<T>, DenseArray<T>> gru_cell_backward(const DenseArray<T>& d_out, const DenseArray<T>& messages,
                                                          const DenseArray<T>& state, const GruParams<T>& params,
                                                          const GruCache<T>& cache, GruParams<T>& grads);

// ---------------------------------------------------------------------------
// Block-banded propagation

/// pre[k] = C[k] E[k] + U[k] E[k+1] + L[k-1] E[k-1], shape [K, S*P, H].
template <typename T>
DenseArray<T> aggregate_banded(const BandedBlocks<T>& blocks, const DenseArray<T>& embeddings);

/// Adjoint of aggregate_banded: d E from d pre.
template <typename T>
DenseArray<T> aggregate_banded_backward(const BandedBlocks<T>& blocks, const DenseArray<T>& d_pre);

/// pre viewed as [K, S, P*H] times Wps [P*H, H], plus the per-message bias
/// sum_p in_degree[n, p] * bias[p]. Returns [K, S, H].
template <typename T>
DenseArray<T> incoming_messages(const DenseArray<T>& pre_flat, const DenseArray<T>& edge_weights,
                                const DenseArray<T>& bias, const DenseArray<T>& in_degree);

/// One low-bandwidth GGNN step on embeddings [K, S, H].
template <typename T>
DenseArray<T> propagation_step(const BandedBlocks<T>& blocks, const DenseArray<T>& embeddings,
                               const DenseArray<T>& edge_weights, const DenseArray<T>& bias,
                               const GruParams<T>& gru);

}  // namespace bandgnn
