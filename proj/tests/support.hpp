// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures and independent oracles for the unit and acceptance tests.
// Nothing here calls into the code under test beyond constructing inputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bandgnn/graph.hpp"
#include "bandgnn/model.hpp"

namespace bandgnn::testing {

/// Random valid graph. Edges are drawn with probability `density` among
/// pairs with |src - dst| <= max_span (all pairs when max_span < 0).
inline Graph random_graph(std::mt19937_64& rng, std::int32_t n, std::int32_t p, double density,
                          std::int32_t max_span = -1, std::int32_t num_candidates = 3,
                          std::int32_t num_features = 1) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Graph g;
  g.num_nodes = n;
  g.num_edge_types = p;
  for (EdgeType t = 0; t < p; ++t) {
    for (NodeId s = 0; s < n; ++s) {
      for (NodeId d = 0; d < n; ++d) {
        if (max_span >= 0 && std::abs(s - d) > max_span) continue;
        if (unit(rng) < density) g.edges.push_back({t, s, d});
      }
    }
  }
  std::vector<NodeId> nodes(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  g.hole = nodes[0];
  const auto c = std::min<std::int32_t>(num_candidates, std::max(1, n - 1));
  for (std::int32_t i = 0; i < c; ++i) g.candidates.push_back(nodes[static_cast<std::size_t>(n > 1 ? i + 1 : 0)]);
  g.label = static_cast<std::int32_t>(rng() % g.candidates.size());
  if (num_features > 1) {
    for (NodeId i = 0; i < n; ++i) g.node_features.push_back(static_cast<std::int32_t>(rng() % num_features));
  }
  return g;
}

inline Permutation random_permutation(std::mt19937_64& rng, std::int32_t n) {
  std::vector<NodeId> m(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  std::shuffle(m.begin(), m.end(), rng);
  return Permutation(m);
}

/// Parameters with every entry (biases included) uniform in [-scale, scale].
inline ModelParams random_params(const ModelConfig& config, std::uint64_t seed, double scale = 0.5) {
  ModelParams p = ModelParams::zeros(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  p.for_each([&](std::string_view, DenseArray<double>& a) {
    for (auto& v : a.values()) v = u(rng);
  });
  return p;
}

/// max |a - b| / max(max |b|, 1e-300)
inline double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double diff = 0, scale = 1e-300;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  return diff;
}

// ---------------------------------------------------------------------------
// Oracles

/// Schoolbook product of row-major [m, k] x [k, n].
inline std::vector<double> naive_matmul(const double* a, const double* b, std::size_t m, std::size_t k,
                                        std::size_t n) {
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * n + j];
      out[i * n + j] = s;
    }
  }
  return out;
}

/// Element-wise GRU for one row. Weights are [H, H] row-major, applied as
/// row-vector times matrix.
inline std::vector<double> scalar_gru_row(const double* m, const double* h, const GruParams<double>& p) {
  const std::size_t H = p.hidden();
  auto affine = [&](const DenseArray<double>& w, const double* x, const DenseArray<double>& u, const double* y,
                    const DenseArray<double>& b, std::size_t j) {
    double s = b[j];
    for (std::size_t i = 0; i < H; ++i) s += x[i] * w[i * H + j] + y[i] * u[i * H + j];
    return s;
  };
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  std::vector<double> r(H), z(H), rh(H), out(H);
  for (std::size_t j = 0; j < H; ++j) {
    r[j] = sig(affine(p.w_r, m, p.u_r, h, p.b_r, j));
    z[j] = sig(affine(p.w_z, m, p.u_z, h, p.b_z, j));
  }
  for (std::size_t j = 0; j < H; ++j) rh[j] = r[j] * h[j];
  for (std::size_t j = 0; j < H; ++j) {
    const double c = std::tanh(affine(p.w_h, m, p.u_h, rh.data(), p.b_h, j));
    out[j] = (1 - z[j]) * h[j] + z[j] * c;
  }
  return out;
}

/// Nodes with a directed path of length <= steps to a candidate, plus the
/// hole, via boolean matrix powering of (I + A).
inline std::vector<NodeId> reachable_by_matrix_power(const Graph& g, std::int32_t steps) {
  const auto n = static_cast<std::size_t>(g.num_nodes);
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));  // reach[i][j]: i ->* j within k steps
  std::vector<std::vector<char>> step(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) reach[i][i] = step[i][i] = 1;
  for (const Edge& e : g.edges) step[static_cast<std::size_t>(e.src)][static_cast<std::size_t>(e.dst)] = 1;
  for (std::int32_t k = 0; k < steps; ++k) {
    std::vector<std::vector<char>> next(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < n; ++m) {
        if (!reach[i][m]) continue;
        for (std::size_t j = 0; j < n; ++j) next[i][j] |= step[m][j];
      }
    }
    reach = std::move(next);
  }
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < n; ++i) {
    bool keep = static_cast<NodeId>(i) == g.hole;
    for (NodeId c : g.candidates) keep = keep || reach[i][static_cast<std::size_t>(c)];
    if (keep) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

/// Exact bandwidth minimum by trying every ordering (independent of the
/// library's brute force). n <= 9.
inline std::int32_t exhaustive_min_bandwidth(const Graph& g) {
  std::vector<NodeId> pos(static_cast<std::size_t>(g.num_nodes));
  for (NodeId i = 0; i < g.num_nodes; ++i) pos[static_cast<std::size_t>(i)] = i;
  std::int32_t best = std::max(0, g.num_nodes - 1);
  do {
    std::int32_t b = 0;
    for (const Edge& e : g.edges) {
      b = std::max(b, std::abs(pos[static_cast<std::size_t>(e.src)] - pos[static_cast<std::size_t>(e.dst)]));
    }
    best = std::min(best, b);
  } while (std::next_permutation(pos.begin(), pos.end()));
  return best;
}

// ---------------------------------------------------------------------------
// Curated suite of small graphs (N <= 9) for compiler quality checks

inline Graph undirected(std::int32_t n, const std::vector<std::pair<NodeId, NodeId>>& pairs) {
  Graph g;
  g.num_nodes = n;
  g.num_edge_types = 1;
  std::set<Edge> edges;
  for (auto [a, b] : pairs) {
    edges.insert({0, a, b});
    edges.insert({0, b, a});
  }
  g.edges.assign(edges.begin(), edges.end());
  g.hole = 0;
  for (NodeId i = 1; i < n; ++i) g.candidates.push_back(i);
  if (g.candidates.empty()) g.candidates.push_back(0);
  g.label = 0;
  return g;
}

inline Graph relabel(const Graph& g, const std::vector<NodeId>& mapping) {
  return apply_permutation(g, Permutation(mapping));
}

inline Graph path_graph(std::int32_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return undirected(n, e);
}

inline Graph complete_graph(std::int32_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  }
  return undirected(n, e);
}

inline Graph star_graph(std::int32_t leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return undirected(leaves + 1, e);
}

inline std::vector<Graph> curated_suite() {
  std::vector<Graph> s;
  s.push_back(relabel(path_graph(6), {3, 0, 5, 1, 4, 2}));               // shuffled path
  s.push_back(path_graph(9));                                            // already optimal
  s.push_back(star_graph(4));                                            // K_{1,4}
  s.push_back(relabel(star_graph(6), {6, 0, 1, 2, 3, 4, 5}));            // K_{1,6}, hub last
  s.push_back(complete_graph(5));                                        // K_5
  s.push_back(undirected(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}}));  // cycle C_6
  s.push_back(relabel(undirected(8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 0}}),
                      {0, 4, 1, 5, 2, 6, 3, 7}));                            // shuffled C_8
  s.push_back(undirected(9, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {6, 7}, {7, 8}, {0, 3}, {3, 6},
                             {1, 4}, {4, 7}, {2, 5}, {5, 8}}));             // 3x3 grid
  s.push_back(undirected(5, {{0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {1, 4}}));  // K_{2,3}
  s.push_back(undirected(7, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}}));  // binary tree
  s.push_back(undirected(9, {{0, 1}, {1, 2}, {2, 3}, {0, 4}, {1, 5}, {2, 6}, {3, 7}, {3, 8}}));  // caterpillar
  s.push_back(undirected(8, {{0, 7}, {7, 1}, {2, 6}, {6, 3}, {3, 5}}));  // two shuffled paths + isolated node
  s.push_back(undirected(6, {{0, 5}, {1, 4}, {2, 3}}));                  // perfect matching, far apart
  s.push_back(undirected(7, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 4}}));  // two triangles
  s.push_back(undirected(8, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {4, 5}, {4, 6}, {5, 7}, {6, 7}, {0, 4},
                             {1, 5}, {2, 6}, {3, 7}}));                     // cube Q_3
  s.push_back(undirected(7, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {1, 2}, {3, 4}, {5, 6}}));  // windmill
  s.push_back(relabel(path_graph(8), {7, 0, 6, 1, 5, 2, 4, 3}));          // zig-zag path
  s.push_back(undirected(9, {{0, 8}, {8, 1}, {1, 7}, {7, 2}, {2, 6}, {6, 3}, {3, 5}, {5, 4}, {0, 4}}));  // scrambled C_9
  s.push_back(undirected(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}, {1, 3}, {2, 4}, {3, 5}}));  // square of P_6
  {
    // Directed, multi-typed ladder with hand-placed long edges.
    Graph g;
    g.num_nodes = 8;
    g.num_edge_types = 2;
    g.edges = {{0, 0, 7}, {0, 7, 1}, {0, 1, 6}, {1, 6, 2}, {1, 2, 5}, {1, 5, 3}, {0, 3, 4}};
    std::sort(g.edges.begin(), g.edges.end());
    g.hole = 0;
    g.candidates = {1, 2, 3, 4, 5, 6, 7};
    s.push_back(g);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient oracle

struct FdReport {
  double max_rel_error = 0;
  std::string worst;  // "<param>[<index>]"
  std::size_t coordinates = 0;
};

/// Central differences of loss_value against loss_and_grad over every
/// parameter coordinate. Relative error is |g - fd| / max(|g|, |fd|, floor).
inline FdReport finite_difference_check(const PreparedBatch& batch, const ModelParams& params,
                                        const ModelConfig& config, std::uint64_t seed, double step = 1e-5,
                                        double floor = 1e-6) {
  const LossAndGrad analytic = loss_and_grad(batch, params, config, seed, true);
  ModelParams probe = params;
  FdReport report;
  std::vector<const DenseArray<double>*> grads;
  analytic.grad.for_each([&](std::string_view, const DenseArray<double>& g) { grads.push_back(&g); });
  std::size_t which = 0;
  probe.for_each([&](std::string_view name, DenseArray<double>& a) {
    const DenseArray<double>& g = *grads[which++];
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double keep = a[i];
      a[i] = keep + step;
      const double up = loss_value(batch, probe, config, seed, true);
      a[i] = keep - step;
      const double down = loss_value(batch, probe, config, seed, true);
      a[i] = keep;
      const double fd = (up - down) / (2 * step);
      const double err = std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), floor});
      ++report.coordinates;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = std::string(name) + "[" + std::to_string(i) + "]";
      }
    }
  });
  return report;
}

/// The 12-node gradient-check instance: K=3, S=4, P=2, H=4, T=3.
struct FdInstance {
  ModelConfig config;
  ModelParams params;
  PreparedBatch batch;
};

inline FdInstance fd_instance(double label_smoothing = 0.1, double weight_decay = 1e-3, double keep_prob = 1.0) {
  FdInstance inst;
  inst.config.hidden = 4;
  inst.config.steps = 3;
  inst.config.edge_types = 2;
  inst.config.block_size = 4;
  inst.config.num_features = 3;
  inst.config.label_smoothing = label_smoothing;
  inst.config.weight_decay = weight_decay;
  inst.config.dropout_keep_prob = keep_prob;
  std::mt19937_64 rng(12);
  const Graph g = random_graph(rng, 12, 2, 0.3, 5, 3, 3);  // spans up to 5: some edges cross one block
  inst.params = random_params(inst.config, 1234, 0.5);
  inst.batch = prepare_batch(single_supergraph(g, 4), Backend::Banded);
  return inst;
}

}  // namespace bandgnn::testing
