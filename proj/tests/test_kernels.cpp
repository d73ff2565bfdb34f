// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "bandgnn/kernels.hpp"
#include "bandgnn/packer.hpp"
#include "bandgnn/reference.hpp"
#include "support.hpp"

using namespace bandgnn;

namespace {

DenseArray<double> random_array(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  DenseArray<double> a(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : a.values()) v = u(rng);
  return a;
}

GruParams<double> random_gru(std::size_t H, std::mt19937_64& rng) {
  GruParams<double> p = GruParams<double>::zeros(H);
  for (auto* a : {&p.w_r, &p.w_z, &p.w_h, &p.u_r, &p.u_z, &p.u_h, &p.b_r, &p.b_z, &p.b_h}) {
    *a = random_array(a->shape(), rng, 0.6);
  }
  return p;
}

template <typename T>
DenseArray<T> cast(const DenseArray<double>& a) {
  std::vector<T> v(a.values().begin(), a.values().end());
  return DenseArray<T>(a.shape(), std::move(v));
}

template <typename T>
GruParams<T> cast(const GruParams<double>& p) {
  GruParams<T> out;
  out.w_r = cast<T>(p.w_r);
  out.w_z = cast<T>(p.w_z);
  out.w_h = cast<T>(p.w_h);
  out.u_r = cast<T>(p.u_r);
  out.u_z = cast<T>(p.u_z);
  out.u_h = cast<T>(p.u_h);
  out.b_r = cast<T>(p.b_r);
  out.b_z = cast<T>(p.b_z);
  out.b_h = cast<T>(p.b_h);
  return out;
}

struct BandedCase {
  Supergraph sg;
  BandedBlocks<double> blocks;
  reference::SparseAdjacency retained;  // only the edges kept by the blocks
  DenseArray<double> e, w, bias;
  GruParams<double> gru;
  std::size_t K, S, P, H;
};

BandedCase make_case(std::mt19937_64& rng, std::size_t K, std::size_t S, std::size_t P, std::size_t H,
                     std::int32_t max_span) {
  BandedCase c;
  c.K = K;
  c.S = S;
  c.P = P;
  c.H = H;
  const auto n = static_cast<std::int32_t>(K * S);
  const Graph g = testing::random_graph(rng, n, static_cast<std::int32_t>(P), 0.3, max_span);
  c.sg = single_supergraph(g, static_cast<std::int32_t>(S));
  c.blocks = extract_banded<double>(c.sg, static_cast<std::int32_t>(S)).blocks;
  c.retained = reference::SparseAdjacency::from_edges(n, static_cast<std::int32_t>(P), reconstruct_edges(c.blocks));
  c.e = random_array({K, S, H}, rng);
  c.w = random_array({P * H, H}, rng, 0.5);
  c.bias = random_array({P, H}, rng, 0.5);
  c.gru = random_gru(H, rng);
  return c;
}

DenseArray<double> flat(DenseArray<double> a) {
  const std::size_t H = a.dim(a.rank() - 1);
  const std::size_t n = a.size() / H;
  return std::move(a).reshaped({n, H});
}

}  // namespace

TEST_CASE("bmm basics") {
  std::mt19937_64 rng(1);
  const DenseArray<double> x = random_array({2, 3, 4}, rng);
  DenseArray<double> eye({2, 3, 3});
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < 3; ++i) eye.at({b, i, i}) = 1.0;
  }
  CHECK(testing::max_abs_diff(bmm(eye, x).values(), x.values()) == 0.0);
  const DenseArray<double> zero({2, 5, 3});
  const DenseArray<double> product = bmm(zero, x);
  for (double v : product.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(bmm(x, x), std::invalid_argument);
  CHECK_THROWS_AS(bmm(DenseArray<double>({3, 2, 3}), x), std::invalid_argument);
}

TEST_CASE("bmm matches the schoolbook product") {
  std::mt19937_64 rng(2);
  const DenseArray<double> a = random_array({3, 4, 5}, rng);
  const DenseArray<double> b = random_array({3, 5, 2}, rng);
  const DenseArray<double> c = bmm(a, b);
  REQUIRE(c.shape() == Shape{3, 4, 2});
  for (std::size_t k = 0; k < 3; ++k) {
    const auto ref = testing::naive_matmul(a.data() + k * 20, b.data() + k * 10, 4, 5, 2);
    CHECK(testing::max_abs_diff(std::span<const double>(c.data() + k * 8, 8), ref) <= 1e-12);
  }
}

TEST_CASE("transposed batch products") {
  std::mt19937_64 rng(3);
  const DenseArray<double> a = random_array({2, 5, 4}, rng);  // used as a^T: [4, 5]
  const DenseArray<double> b = random_array({2, 5, 3}, rng);
  DenseArray<double> tn({2, 4, 3});
  bmm_tn_accumulate(batch_view(tn), batch_view(a), batch_view(b));
  const DenseArray<double> c = random_array({2, 4, 3}, rng);  // c b^T: [4, 5]
  DenseArray<double> nt({2, 4, 5});
  bmm_nt_accumulate(batch_view(nt), batch_view(c), batch_view(b));
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> at(20), bt(15);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 4; ++j) at[j * 5 + i] = a.at({k, i, j});
      for (std::size_t j = 0; j < 3; ++j) bt[j * 5 + i] = b.at({k, i, j});
    }
    CHECK(testing::max_abs_diff(std::span<const double>(tn.data() + k * 12, 12),
                                testing::naive_matmul(at.data(), b.data() + k * 15, 4, 5, 3)) <= 1e-12);
    CHECK(testing::max_abs_diff(std::span<const double>(nt.data() + k * 20, 20),
                                testing::naive_matmul(c.data() + k * 12, bt.data(), 4, 3, 5)) <= 1e-12);
  }
}

TEST_CASE("gru_cell") {
  const std::size_t H = 5;
  std::mt19937_64 rng(4);
  SUBCASE("closed update gate keeps the state") {
    GruParams<double> p = random_gru(H, rng);
    p.w_z.fill(0);
    p.u_z.fill(0);
    p.b_z.fill(-1e3);
    const DenseArray<double> m = random_array({3, H}, rng), h = random_array({3, H}, rng);
    CHECK(testing::max_abs_diff(gru_cell(m, h, p).values(), h.values()) == 0.0);
  }
  SUBCASE("all zeros") {
    const DenseArray<double> z({3, H});
    const DenseArray<double> out = gru_cell(z, z, GruParams<double>::zeros(H));
    for (double v : out.values()) CHECK(v == 0.0);
  }
  SUBCASE("scalar oracle") {
    const GruParams<double> p = random_gru(H, rng);
    const DenseArray<double> m = random_array({7, H}, rng), h = random_array({7, H}, rng);
    const DenseArray<double> out = gru_cell(m, h, p);
    for (std::size_t i = 0; i < 7; ++i) {
      const auto ref = testing::scalar_gru_row(m.data() + i * H, h.data() + i * H, p);
      CHECK(testing::max_abs_diff(std::span<const double>(out.data() + i * H, H), ref) <= 1e-12);
    }
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(gru_cell(DenseArray<double>({2, H}), DenseArray<double>({3, H}), GruParams<double>::zeros(H)),
                    std::invalid_argument);
  }
}

TEST_CASE("gru_cell_backward matches finite differences") {
  const std::size_t H = 3, rows = 2;
  std::mt19937_64 rng(5);
  GruParams<double> p = random_gru(H, rng);
  DenseArray<double> m = random_array({rows, H}, rng), h = random_array({rows, H}, rng);
  const DenseArray<double> d_out = random_array({rows, H}, rng);
  auto objective = [&]() {
    const auto out = gru_cell(m, h, p);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * d_out[i];
    return s;
  };
  GruCache<double> cache;
  gru_cell(m, h, p, &cache);
  GruParams<double> grads = GruParams<double>::zeros(H);
  auto [dm, dh] = gru_cell_backward(d_out, m, h, p, cache, grads);

  const double eps = 1e-6;
  auto fd = [&](double& x) {
    const double keep = x;
    x = keep + eps;
    const double up = objective();
    x = keep - eps;
    const double down = objective();
    x = keep;
    return (up - down) / (2 * eps);
  };
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(dm[i] == doctest::Approx(fd(m[i])).epsilon(1e-6));
    CHECK(dh[i] == doctest::Approx(fd(h[i])).epsilon(1e-6));
  }
  const std::vector<std::pair<DenseArray<double>*, DenseArray<double>*>> pairs{
      {&p.w_r, &grads.w_r}, {&p.u_z, &grads.u_z}, {&p.u_h, &grads.u_h}, {&p.b_h, &grads.b_h}, {&p.b_r, &grads.b_r}};
  for (auto [param, grad] : pairs) {
    for (std::size_t i = 0; i < param->size(); ++i) CHECK((*grad)[i] == doctest::Approx(fd((*param)[i])).epsilon(1e-6));
  }
}

TEST_CASE("propagation_step with no edges is the GRU on zero messages") {
  std::mt19937_64 rng(6);
  Graph g;
  g.num_nodes = 12;
  g.num_edge_types = 2;
  g.candidates = {1};
  const auto blocks = extract_banded<double>(single_supergraph(g, 4), 4).blocks;
  const DenseArray<double> e = random_array({3, 4, 4}, rng);
  const DenseArray<double> w = random_array({8, 4}, rng);
  const GruParams<double> gru = random_gru(4, rng);
  const DenseArray<double> out = propagation_step(blocks, e, w, DenseArray<double>({2, 4}), gru);
  const DenseArray<double> expect = gru_cell(DenseArray<double>({3, 4, 4}), e, gru);
  CHECK(testing::max_abs_diff(out.values(), expect.values()) == 0.0);
}

TEST_CASE("a single edge delivers e_j W_p to node i only") {
  std::mt19937_64 rng(7);
  const std::size_t K = 2, S = 3, P = 2, H = 3;
  Graph g;
  g.num_nodes = 6;
  g.num_edge_types = 2;
  g.edges = {{1, 4, 3}};  // type 1, j=4 -> i=3, both in block 1
  g.candidates = {1};
  const auto blocks = extract_banded<double>(single_supergraph(g, 3), 3).blocks;
  const DenseArray<double> e = random_array({K, S, H}, rng);
  const DenseArray<double> w = random_array({P * H, H}, rng);
  const DenseArray<double> pre = aggregate_banded(blocks, e);
  const DenseArray<double> incoming =
      incoming_messages(DenseArray<double>(pre).reshaped({K, S, P * H}), w, DenseArray<double>({P, H}), blocks.in_degree);
  const auto ref = testing::naive_matmul(e.data() + 4 * H, w.data() + 1 * H * H, 1, H, H);
  for (std::size_t node = 0; node < K * S; ++node) {
    for (std::size_t h = 0; h < H; ++h) {
      const double expect = node == 3 ? ref[h] : 0.0;
      CHECK(incoming[node * H + h] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("banded step equals the sparse oracle") {
  std::mt19937_64 rng(8);
  for (std::size_t K : {1, 2, 3, 4}) {
    for (std::size_t S : {2, 4}) {
      for (std::size_t P : {1, 2, 3}) {
        for (std::size_t H : {2, 4}) {
          // within the band
          BandedCase c = make_case(rng, K, S, P, H, static_cast<std::int32_t>(S) - 1);
          CHECK(c.blocks.dropped_edges.empty());
          const auto banded = propagation_step(c.blocks, c.e, c.w, c.bias, c.gru);
          const auto sparse = reference::sparse_step(c.retained, flat(DenseArray<double>(c.e)), c.w, c.bias, c.gru);
          CHECK(testing::max_rel_diff(banded.values(), sparse.values()) <= 1e-10);
          // beyond the band: oracle on the retained edges
          BandedCase d = make_case(rng, K, S, P, H, -1);
          const auto lossy = propagation_step(d.blocks, d.e, d.w, d.bias, d.gru);
          const auto kept = reference::sparse_step(d.retained, flat(DenseArray<double>(d.e)), d.w, d.bias, d.gru);
          CHECK(testing::max_rel_diff(lossy.values(), kept.values()) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("single precision agrees with double to 1e-5") {
  std::mt19937_64 rng(9);
  BandedCase c = make_case(rng, 4, 4, 2, 4, 3);
  const auto d = propagation_step(c.blocks, c.e, c.w, c.bias, c.gru);
  const auto blocks_f = extract_banded<float>(c.sg, 4).blocks;
  const auto f = propagation_step(blocks_f, cast<float>(c.e), cast<float>(c.w), cast<float>(c.bias), cast<float>(c.gru));
  std::vector<double> widened(f.values().begin(), f.values().end());
  CHECK(testing::max_rel_diff(widened, d.values()) <= 1e-5);
}

TEST_CASE("reshaping the pre-messages moves no data") {
  std::mt19937_64 rng(10);
  BandedCase c = make_case(rng, 3, 4, 2, 4, 3);
  DenseArray<double> pre = aggregate_banded(c.blocks, c.e);
  const double* before = pre.data();
  const BufferTraffic start = buffer_traffic();
  DenseArray<double> view = std::move(pre).reshaped({3, 4, 8});
  CHECK(view.data() == before);
  CHECK(buffer_traffic().allocations == start.allocations);
  CHECK(buffer_traffic().copies == start.copies);

  const BufferTraffic step_start = buffer_traffic();
  (void)propagation_step(c.blocks, c.e, c.w, c.bias, c.gru);
  CHECK(buffer_traffic().copies == step_start.copies);
}

TEST_CASE("message aggregation is linear in the embeddings") {
  std::mt19937_64 rng(11);
  BandedCase c = make_case(rng, 3, 4, 3, 4, -1);
  const DenseArray<double> e2 = random_array({3, 4, 4}, rng);
  DenseArray<double> sum = c.e;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += e2[i];
  const DenseArray<double> zero_bias({3, 4});
  auto incoming = [&](const DenseArray<double>& e) {
    return incoming_messages(aggregate_banded(c.blocks, e).reshaped({3, 4, 12}), c.w, zero_bias, c.blocks.in_degree);
  };
  const auto a = incoming(c.e), b = incoming(e2), ab = incoming(sum);
  std::vector<double> added(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) added[i] = a[i] + b[i];
  CHECK(testing::max_rel_diff(ab.values(), added) <= 1e-13);
}

TEST_CASE("instrumented multiply-adds equal the closed forms") {
  std::mt19937_64 rng(12);
  for (std::size_t K : {1, 2, 5}) {
    for (std::size_t S : {2, 3, 8}) {
      for (std::size_t P : {1, 2}) {
        for (std::size_t H : {1, 4}) {
          BandedCase c = make_case(rng, K, S, P, std::max<std::size_t>(H, 2), -1);
          const std::size_t h = c.H;
          MultiplyAddScope step;
          (void)propagation_step(c.blocks, c.e, c.w, c.bias, c.gru);
          CHECK(step.count() == banded_step_multiply_adds(K, S, P, h));
          CHECK(step.count() == K * (S * P) * S * h * 3 - 2 * (S * P) * S * h + K * S * (P * h) * h + 6 * K * S * h * h);

          MultiplyAddScope sparse;
          (void)reference::sparse_step(c.retained, flat(DenseArray<double>(c.e)), c.w, c.bias, c.gru);
          CHECK(sparse.count() == sparse_step_multiply_adds(K * S, c.retained.num_edges(), h));

          const auto dense_adj = reference::dense_adjacency(static_cast<std::int32_t>(K * S), static_cast<std::int32_t>(P),
                                                            reconstruct_edges(c.blocks));
          MultiplyAddScope dense;
          (void)reference::dense_step(dense_adj, flat(DenseArray<double>(c.e)), c.w, c.bias, c.gru);
          CHECK(dense.count() == dense_step_multiply_adds(K * S, P, h));
        }
      }
    }
  }
  // dense / banded adjacency work approaches N / (3S) as K grows
  {
    const std::uint64_t K = 1024, S = 16, P = 2, H = 8, N = K * S;
    const double dense_adj = static_cast<double>(P * N * N * H);
    const double ratio = dense_adj / static_cast<double>(banded_adjacency_multiply_adds(K, S, P, H));
    CHECK(ratio / (static_cast<double>(N) / (3.0 * S)) == doctest::Approx(1.0).epsilon(1e-3));
  }
  // at fixed N, P, H the adjacency work is 3NSPH (1 - 2S/(3N)): linear in S to leading order
  for (std::uint64_t S : {1, 2, 4, 8, 16, 32}) {
    const std::uint64_t N = 96, P = 2, H = 4;
    CHECK(banded_adjacency_multiply_adds(N / S, S, P, H) == 3 * N * S * P * H - 2 * S * S * P * H);
  }
}
