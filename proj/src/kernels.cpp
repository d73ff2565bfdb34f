// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bandgnn {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

BufferTraffic& buffer_traffic() {
  thread_local BufferTraffic traffic;
  return traffic;
}

std::uint64_t& multiply_add_counter() {
  thread_local std::uint64_t counter = 0;
  return counter;
}

std::uint64_t gru_multiply_adds(std::uint64_t rows, std::uint64_t H) { return 6 * rows * H * H; }

std::uint64_t banded_adjacency_multiply_adds(std::uint64_t K, std::uint64_t S, std::uint64_t P, std::uint64_t H) {
  return (3 * K - 2) * (S * P) * S * H;
}

std::uint64_t banded_step_multiply_adds(std::uint64_t K, std::uint64_t S, std::uint64_t P, std::uint64_t H) {
  return banded_adjacency_multiply_adds(K, S, P, H) + K * S * (P * H) * H + gru_multiply_adds(K * S, H);
}

std::uint64_t dense_step_multiply_adds(std::uint64_t N, std::uint64_t P, std::uint64_t H) {
  return P * N * N * H + P * N * H * H + gru_multiply_adds(N, H);
}

std::uint64_t sparse_step_multiply_adds(std::uint64_t N, std::uint64_t num_edges, std::uint64_t H) {
  return num_edges * H * H + gru_multiply_adds(N, H);
}

namespace {

[[noreturn]] void shape_error(const char* what, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

// c[M, N] += a[M, Kd] b[Kd, N]; each c entry accumulates in ascending k.
template <typename T>
void gemm_nn(T* c, const T* a, const T* b, std::size_t M, std::size_t Kd, std::size_t N) {
  for (std::size_t m = 0; m < M; ++m) {
    T* crow = c + m * N;
    const T* arow = a + m * Kd;
    for (std::size_t k = 0; k < Kd; ++k) {
      const T av = arow[k];
      const T* brow = b + k * N;
      for (std::size_t n = 0; n < N; ++n) crow[n] += av * brow[n];
    }
  }
  multiply_add_counter() += M * Kd * N;
}

// c[M, N] += a[Kd, M]^T b[Kd, N]
template <typename T>
void gemm_tn(T* c, const T* a, const T* b, std::size_t M, std::size_t Kd, std::size_t N) {
  for (std::size_t k = 0; k < Kd; ++k) {
    const T* arow = a + k * M;
    const T* brow = b + k * N;
    for (std::size_t m = 0; m < M; ++m) {
      const T av = arow[m];
      T* crow = c + m * N;
      for (std::size_t n = 0; n < N; ++n) crow[n] += av * brow[n];
    }
  }
  multiply_add_counter() += M * Kd * N;
}

// c[M, N] += a[M, Kd] b[N, Kd]^T
template <typename T>
void gemm_nt(T* c, const T* a, const T* b, std::size_t M, std::size_t Kd, std::size_t N) {
  for (std::size_t m = 0; m < M; ++m) {
    const T* arow = a + m * Kd;
    for (std::size_t n = 0; n < N; ++n) {
      const T* brow = b + n * Kd;
      T acc = T{0};
      for (std::size_t k = 0; k < Kd; ++k) acc += arow[k] * brow[k];
      c[m * N + n] += acc;
    }
  }
  multiply_add_counter() += M * Kd * N;
}

template <typename T>
T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

template <typename T>
std::size_t rows_of(const DenseArray<T>& a, std::size_t hidden) {
  if (a.rank() == 0 || a.shape().back() != hidden) {
    throw std::invalid_argument("expected trailing dimension " + std::to_string(hidden) + ", got " +
                                shape_string(a.shape()));
  }
  return a.size() / hidden;
}

}  // namespace

template <typename T>
MatrixBatch<const T> batch_view(const DenseArray<T>& a, std::size_t first, std::size_t count) {
  if (a.rank() < 2) throw std::invalid_argument("batch_view needs rank >= 2, got " + shape_string(a.shape()));
  const std::size_t rows = a.shape()[a.rank() - 2];
  const std::size_t cols = a.shape()[a.rank() - 1];
  const std::size_t total = rows * cols == 0 ? 0 : a.size() / (rows * cols);
  if (count == std::numeric_limits<std::size_t>::max()) count = total - std::min(first, total);
  if (first + count > total) throw std::out_of_range("batch_view range exceeds batch size");
  return {a.data() + first * rows * cols, count, rows, cols};
}

template <typename T>
MatrixBatch<T> batch_view(DenseArray<T>& a, std::size_t first, std::size_t count) {
  auto v = batch_view(static_cast<const DenseArray<T>&>(a), first, count);
  return {const_cast<T*>(v.data), v.batch, v.rows, v.cols};
}

template <typename T>
void bmm_accumulate(MatrixBatch<T> out, MatrixBatch<const T> a, MatrixBatch<const T> b) {
  if (a.batch != b.batch || out.batch != a.batch || a.cols != b.rows || out.rows != a.rows || out.cols != b.cols) {
    throw std::invalid_argument("bmm_accumulate: incompatible batch views");
  }
  for (std::size_t i = 0; i < a.batch; ++i) gemm_nn(out.matrix(i), a.matrix(i), b.matrix(i), a.rows, a.cols, b.cols);
}

template <typename T>
void bmm_tn_accumulate(MatrixBatch<T> out, MatrixBatch<const T> a, MatrixBatch<const T> b) {
  if (a.batch != b.batch || out.batch != a.batch || a.rows != b.rows || out.rows != a.cols || out.cols != b.cols) {
    throw std::invalid_argument("bmm_tn_accumulate: incompatible batch views");
  }
  for (std::size_t i = 0; i < a.batch; ++i) gemm_tn(out.matrix(i), a.matrix(i), b.matrix(i), a.cols, a.rows, b.cols);
}

template <typename T>
void bmm_nt_accumulate(MatrixBatch<T> out, MatrixBatch<const T> a, MatrixBatch<const T> b) {
  if (a.batch != b.batch || out.batch != a.batch || a.cols != b.cols || out.rows != a.rows || out.cols != b.rows) {
    throw std::invalid_argument("bmm_nt_accumulate: incompatible batch views");
  }
  for (std::size_t i = 0; i < a.batch; ++i) gemm_nt(out.matrix(i), a.matrix(i), b.matrix(i), a.rows, a.cols, b.rows);
}

template <typename T>
DenseArray<T> bmm(const DenseArray<T>& a, const DenseArray<T>& b) {
  if (a.rank() < 2 || a.rank() != b.rank()) shape_error("bmm", a.shape(), b.shape());
  const std::size_t r = a.rank();
  for (std::size_t i = 0; i + 2 < r; ++i) {
    if (a.shape()[i] != b.shape()[i]) shape_error("bmm", a.shape(), b.shape());
  }
  if (a.shape()[r - 1] != b.shape()[r - 2]) shape_error("bmm", a.shape(), b.shape());
  Shape out_shape = a.shape();
  out_shape[r - 1] = b.shape()[r - 1];
  DenseArray<T> out(out_shape);
  bmm_accumulate(batch_view(out), batch_view(a), batch_view(b));
  return out;
}

template <typename T>
DenseArray<T> contract_last(const DenseArray<T>& a, const DenseArray<T>& w) {
  if (a.rank() < 1 || w.rank() != 2 || a.shape().back() != w.shape()[0]) shape_error("contract_last", a.shape(), w.shape());
  const std::size_t kd = w.shape()[0];
  const std::size_t n = w.shape()[1];
  const std::size_t rows = kd == 0 ? 0 : a.size() / kd;
  Shape out_shape = a.shape();
  out_shape.back() = n;
  DenseArray<T> out(out_shape);
  gemm_nn(out.data(), a.data(), w.data(), rows, kd, n);
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
GruParams<T> GruParams<T>::zeros(std::size_t hidden) {
  GruParams<T> p;
  for (auto* m : {&p.w_r, &p.w_z, &p.w_h, &p.u_r, &p.u_z, &p.u_h}) *m = DenseArray<T>({hidden, hidden});
  for (auto* b : {&p.b_r, &p.b_z, &p.b_h}) *b = DenseArray<T>({hidden});
  return p;
}

template <typename T>
DenseArray<T> gru_cell(const DenseArray<T>& messages, const DenseArray<T>& state, const GruParams<T>& params,
                       GruCache<T>* cache) {
  const std::size_t H = params.hidden();
  if (messages.shape() != state.shape()) shape_error("gru_cell", messages.shape(), state.shape());
  const std::size_t rows = rows_of(state, H);
  for (const auto* m : {&params.w_r, &params.w_z, &params.w_h, &params.u_r, &params.u_z, &params.u_h}) {
    if (m->shape() != Shape{H, H}) shape_error("gru_cell weights", m->shape(), Shape{H, H});
  }

  DenseArray<T> r({rows, H}), z({rows, H}), c({rows, H}), rh({rows, H});
  auto init_bias = [&](DenseArray<T>& dst, const DenseArray<T>& bias) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t h = 0; h < H; ++h) dst[i * H + h] = bias[h];
    }
  };
  const T* m = messages.data();
  const T* s = state.data();

  init_bias(r, params.b_r);
  gemm_nn(r.data(), m, params.w_r.data(), rows, H, H);
  gemm_nn(r.data(), s, params.u_r.data(), rows, H, H);
  for (auto& v : r.values()) v = sigmoid(v);

  init_bias(z, params.b_z);
  gemm_nn(z.data(), m, params.w_z.data(), rows, H, H);
  gemm_nn(z.data(), s, params.u_z.data(), rows, H, H);
  for (auto& v : z.values()) v = sigmoid(v);

  for (std::size_t i = 0; i < rows * H; ++i) rh[i] = r[i] * s[i];
  init_bias(c, params.b_h);
  gemm_nn(c.data(), m, params.w_h.data(), rows, H, H);
  gemm_nn(c.data(), rh.data(), params.u_h.data(), rows, H, H);
  for (auto& v : c.values()) v = std::tanh(v);

  DenseArray<T> out(state.shape());
  for (std::size_t i = 0; i < rows * H; ++i) out[i] = (T{1} - z[i]) * s[i] + z[i] * c[i];

  if (cache) {
    cache->reset = std::move(r);
    cache->update = std::move(z);
    cache->candidate = std::move(c);
    cache->reset_state = std::move(rh);
  }
  return out;
}

template <typename T>
std::pair<DenseArray<T>, DenseArray<T>> gru_cell_backward(const DenseArray<T>& d_out, const DenseArray<T>& messages,
                                                          const DenseArray<T>& state, const GruParams<T>& params,
                                                          const GruCache<T>& cache, GruParams<T>& grads) {
  const std::size_t H = params.hidden();
  const std::size_t rows = rows_of(state, H);
  if (d_out.shape() != state.shape()) shape_error("gru_cell_backward", d_out.shape(), state.shape());
  const T* s = state.data();
  const T* r = cache.reset.data();
  const T* z = cache.update.data();
  const T* c = cache.candidate.data();

  DenseArray<T> d_msg(state.shape());
  DenseArray<T> d_state(state.shape());
  DenseArray<T> da_r({rows, H}), da_z({rows, H}), da_h({rows, H}), d_rh({rows, H});

  for (std::size_t i = 0; i < rows * H; ++i) {
    const T g = d_out[i];
    d_state[i] = g * (T{1} - z[i]);
    da_z[i] = g * (c[i] - s[i]) * z[i] * (T{1} - z[i]);
    da_h[i] = g * z[i] * (T{1} - c[i] * c[i]);
  }

  // candidate branch
  gemm_tn(grads.w_h.data(), messages.data(), da_h.data(), H, rows, H);
  gemm_tn(grads.u_h.data(), cache.reset_state.data(), da_h.data(), H, rows, H);
  gemm_nt(d_msg.data(), da_h.data(), params.w_h.data(), rows, H, H);
  gemm_nt(d_rh.data(), da_h.data(), params.u_h.data(), rows, H, H);
  for (std::size_t i = 0; i < rows * H; ++i) {
    d_state[i] += d_rh[i] * r[i];
    da_r[i] = d_rh[i] * s[i] * r[i] * (T{1} - r[i]);
  }

  // update and reset gates
  gemm_tn(grads.w_z.data(), messages.data(), da_z.data(), H, rows, H);
  gemm_tn(grads.u_z.data(), s, da_z.data(), H, rows, H);
  gemm_nt(d_msg.data(), da_z.data(), params.w_z.data(), rows, H, H);
  gemm_nt(d_state.data(), da_z.data(), params.u_z.data(), rows, H, H);

  gemm_tn(grads.w_r.data(), messages.data(), da_r.data(), H, rows, H);
  gemm_tn(grads.u_r.data(), s, da_r.data(), H, rows, H);
  gemm_nt(d_msg.data(), da_r.data(), params.w_r.data(), rows, H, H);
  gemm_nt(d_state.data(), da_r.data(), params.u_r.data(), rows, H, H);

  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t h = 0; h < H; ++h) {
      grads.b_r[h] += da_r[i * H + h];
      grads.b_z[h] += da_z[i * H + h];
      grads.b_h[h] += da_h[i * H + h];
    }
  }
  return {std::move(d_msg), std::move(d_state)};
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void check_banded_embeddings(const BandedBlocks<T>& blocks, const DenseArray<T>& e, const char* what) {
  const auto K = static_cast<std::size_t>(blocks.num_blocks);
  const auto S = static_cast<std::size_t>(blocks.block_size);
  if (e.rank() != 3 || e.dim(0) != K || e.dim(1) != S) {
    shape_error(what, e.shape(), Shape{K, S, e.rank() == 3 ? e.dim(2) : 0});
  }
}

}  // namespace

template <typename T>
DenseArray<T> aggregate_banded(const BandedBlocks<T>& blocks, const DenseArray<T>& embeddings) {
  check_banded_embeddings(blocks, embeddings, "aggregate_banded");
  const std::size_t K = static_cast<std::size_t>(blocks.num_blocks);
  DenseArray<T> pre = bmm(blocks.diagonal, embeddings);
  if (K > 1) {
    bmm_accumulate(batch_view(pre, 0, K - 1), batch_view(blocks.upper), batch_view(embeddings, 1, K - 1));
    bmm_accumulate(batch_view(pre, 1, K - 1), batch_view(blocks.lower), batch_view(embeddings, 0, K - 1));
  }
  return pre;
}

template <typename T>
DenseArray<T> aggregate_banded_backward(const BandedBlocks<T>& blocks, const DenseArray<T>& d_pre) {
  const std::size_t K = static_cast<std::size_t>(blocks.num_blocks);
  const std::size_t S = static_cast<std::size_t>(blocks.block_size);
  const std::size_t P = static_cast<std::size_t>(blocks.num_edge_types);
  if (d_pre.rank() != 3 || d_pre.dim(0) != K || d_pre.dim(1) != S * P) {
    shape_error("aggregate_banded_backward", d_pre.shape(), Shape{K, S * P});
  }
  const std::size_t H = d_pre.dim(2);
  DenseArray<T> d_e({K, S, H});
  bmm_tn_accumulate(batch_view(d_e), batch_view(blocks.diagonal), batch_view(d_pre));
  if (K > 1) {
    bmm_tn_accumulate(batch_view(d_e, 1, K - 1), batch_view(blocks.upper), batch_view(d_pre, 0, K - 1));
    bmm_tn_accumulate(batch_view(d_e, 0, K - 1), batch_view(blocks.lower), batch_view(d_pre, 1, K - 1));
  }
  return d_e;
}

template <typename T>
DenseArray<T> incoming_messages(const DenseArray<T>& pre_flat, const DenseArray<T>& edge_weights,
                                const DenseArray<T>& bias, const DenseArray<T>& in_degree) {
  DenseArray<T> incoming = contract_last(pre_flat, edge_weights);
  const std::size_t H = edge_weights.dim(1);
  const std::size_t P = bias.dim(0);
  const std::size_t rows = incoming.size() / H;
  if (bias.shape() != Shape{P, H} || in_degree.shape() != Shape{rows, P}) {
    shape_error("incoming_messages bias", bias.shape(), in_degree.shape());
  }
  for (std::size_t n = 0; n < rows; ++n) {
    T* row = incoming.data() + n * H;
    for (std::size_t p = 0; p < P; ++p) {
      const T deg = in_degree[n * P + p];
      if (deg == T{0}) continue;
      const T* b = bias.data() + p * H;
      for (std::size_t h = 0; h < H; ++h) row[h] += deg * b[h];
    }
  }
  return incoming;
}

template <typename T>
DenseArray<T> propagation_step(const BandedBlocks<T>& blocks, const DenseArray<T>& embeddings,
                               const DenseArray<T>& edge_weights, const DenseArray<T>& bias,
                               const GruParams<T>& gru) {
  const std::size_t K = static_cast<std::size_t>(blocks.num_blocks);
  const std::size_t S = static_cast<std::size_t>(blocks.block_size);
  const std::size_t P = static_cast<std::size_t>(blocks.num_edge_types);
  check_banded_embeddings(blocks, embeddings, "propagation_step");
  const std::size_t H = embeddings.dim(2);
  if (edge_weights.shape() != Shape{P * H, H}) shape_error("propagation_step Wps", edge_weights.shape(), Shape{P * H, H});

  DenseArray<T> pre = aggregate_banded(blocks, embeddings);           // [K, S*P, H]
  DenseArray<T> pre_flat = std::move(pre).reshaped({K, S, P * H});    // no data movement
  DenseArray<T> incoming = incoming_messages(pre_flat, edge_weights, bias, blocks.in_degree);
  return gru_cell(incoming, embeddings, gru);
}

#define BANDGNN_INSTANTIATE(T)                                                                                    \
  template MatrixBatch<const T> batch_view<T>(const DenseArray<T>&, std::size_t, std::size_t);                     \
  template MatrixBatch<T> batch_view<T>(DenseArray<T>&, std::size_t, std::size_t);                                 \
  template void bmm_accumulate<T>(MatrixBatch<T>, MatrixBatch<const T>, MatrixBatch<const T>);                     \
  template void bmm_tn_accumulate<T>(MatrixBatch<T>, MatrixBatch<const T>, MatrixBatch<const T>);                  \
  template void bmm_nt_accumulate<T>(MatrixBatch<T>, MatrixBatch<const T>, MatrixBatch<const T>);                  \
  template DenseArray<T> bmm<T>(const DenseArray<T>&, const DenseArray<T>&);                                       \
  template DenseArray<T> contract_last<T>(const DenseArray<T>&, const DenseArray<T>&);                             \
  template struct GruParams<T>;                                                                                    \
  template DenseArray<T> gru_cell<T>(const DenseArray<T>&, const DenseArray<T>&, const GruParams<T>&, GruCache<T>*); \
  template std::pair<DenseArray<T>, DenseArray<T>> gru_cell_backward<T>(                                           \
      const DenseArray<T>&, const DenseArray<T>&, const DenseArray<T>&, const GruParams<T>&, const GruCache<T>&,  \
      GruParams<T>&);                                                                                              \
  template DenseArray<T> aggregate_banded<T>(const BandedBlocks<T>&, const DenseArray<T>&);                        \
  template DenseArray<T> aggregate_banded_backward<T>(const BandedBlocks<T>&, const DenseArray<T>&);               \
  template DenseArray<T> incoming_messages<T>(const DenseArray<T>&, const DenseArray<T>&, const DenseArray<T>&,    \
                                              const DenseArray<T>&);                                               \
  template DenseArray<T> propagation_step<T>(const BandedBlocks<T>&, const DenseArray<T>&, const DenseArray<T>&,   \
                                             const DenseArray<T>&, const GruParams<T>&);

BANDGNN_INSTANTIATE(float)
BANDGNN_INSTANTIATE(double)

#undef BANDGNN_INSTANTIATE

}  // namespace bandgnn
