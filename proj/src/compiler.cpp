// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace bandgnn {

namespace {

// Undirected, type-collapsed neighbour lists without self-loops.
std::vector<std::vector<NodeId>> symmetric_neighbours(const Graph& g) {
  std::vector<std::vector<NodeId>> nbrs(static_cast<std::size_t>(g.num_nodes));
  for (const Edge& e : g.edges) {
    if (e.src == e.dst) continue;
    nbrs[static_cast<std::size_t>(e.src)].push_back(e.dst);
    nbrs[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  for (auto& list : nbrs) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return nbrs;
}

}  // namespace

Graph reachability_reduce(const Graph& g, std::int32_t steps, std::vector<NodeId>* kept) {
  const auto n = static_cast<std::size_t>(g.num_nodes);
  // Reverse BFS: predecessors of v are the sources of edges into v.
  std::vector<std::vector<NodeId>> preds(n);
  for (const Edge& e : g.edges) preds[static_cast<std::size_t>(e.dst)].push_back(e.src);

  std::vector<std::int32_t> dist(n, -1);
  std::deque<NodeId> queue;
  for (NodeId c : g.candidates) {
    if (dist[static_cast<std::size_t>(c)] < 0) {
      dist[static_cast<std::size_t>(c)] = 0;
      queue.push_back(c);
    }
  }
  while (!queue.empty()) {
    NodeId v = queue.front();
    queue.pop_front();
    const std::int32_t d = dist[static_cast<std::size_t>(v)];
    if (d == steps) continue;
    for (NodeId u : preds[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = d + 1;
        queue.push_back(u);
      }
    }
  }

  std::vector<NodeId> remap(n, -1);
  std::vector<NodeId> survivors;
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    if (dist[static_cast<std::size_t>(v)] >= 0 || v == g.hole) {
      remap[static_cast<std::size_t>(v)] = static_cast<NodeId>(survivors.size());
      survivors.push_back(v);
    }
  }

  Graph out;
  out.num_nodes = static_cast<std::int32_t>(survivors.size());
  out.num_edge_types = g.num_edge_types;
  for (const Edge& e : g.edges) {
    NodeId s = remap[static_cast<std::size_t>(e.src)];
    NodeId d = remap[static_cast<std::size_t>(e.dst)];
    if (s >= 0 && d >= 0) out.edges.push_back({e.type, s, d});
  }
  out.hole = remap[static_cast<std::size_t>(g.hole)];
  for (NodeId c : g.candidates) out.candidates.push_back(remap[static_cast<std::size_t>(c)]);
  out.label = g.label;
  if (!g.node_features.empty()) {
    for (NodeId v : survivors) out.node_features.push_back(g.node_features[static_cast<std::size_t>(v)]);
  }
  if (kept) *kept = std::move(survivors);
  return out;
}

Permutation rcmk_order(const Graph& g) {
  const auto n = static_cast<std::size_t>(g.num_nodes);
  const auto nbrs = symmetric_neighbours(g);
  std::vector<std::size_t> degree(n);
  for (std::size_t v = 0; v < n; ++v) degree[v] = nbrs[v].size();
  auto by_degree = [&](NodeId a, NodeId b) {
    const auto da = degree[static_cast<std::size_t>(a)];
    const auto db = degree[static_cast<std::size_t>(b)];
    return da != db ? da < db : a < b;
  };

  // Candidate start nodes in (degree, index) order; the first unvisited one
  // opens the next component.
  std::vector<NodeId> starts(n);
  std::iota(starts.begin(), starts.end(), 0);
  std::sort(starts.begin(), starts.end(), by_degree);

  std::vector<char> visited(n, 0);
  std::vector<NodeId> order;
  order.reserve(n);
  std::vector<NodeId> fresh;
  for (NodeId start : starts) {
    if (visited[static_cast<std::size_t>(start)]) continue;
    visited[static_cast<std::size_t>(start)] = 1;
    std::size_t head = order.size();
    order.push_back(start);
    while (head < order.size()) {
      NodeId v = order[head++];
      fresh.clear();
      for (NodeId u : nbrs[static_cast<std::size_t>(v)]) {
        if (!visited[static_cast<std::size_t>(u)]) {
          visited[static_cast<std::size_t>(u)] = 1;
          fresh.push_back(u);
        }
      }
      std::sort(fresh.begin(), fresh.end(), by_degree);
      order.insert(order.end(), fresh.begin(), fresh.end());
    }
  }
  std::reverse(order.begin(), order.end());
  return Permutation::from_order(order);
}

CompiledGraph compile(const Graph& graph, std::int32_t steps) {
  validate_or_throw(graph);
  if (steps <= 0) throw std::invalid_argument("steps must be positive");
  CompiledGraph out;
  out.original_num_nodes = graph.num_nodes;
  Graph reduced = reachability_reduce(graph, steps, &out.kept);
  out.original_bandwidth = compute_bandwidth(reduced);

  Permutation perm = rcmk_order(reduced);
  Graph permuted = apply_permutation(reduced, perm);
  const std::int32_t bw = compute_bandwidth(permuted);
  if (bw <= out.original_bandwidth) {
    out.graph = std::move(permuted);
    out.perm = std::move(perm);
    out.bandwidth = bw;
  } else {
    out.perm = Permutation::identity(reduced.num_nodes);
    out.graph = std::move(reduced);
    out.bandwidth = out.original_bandwidth;
  }
  return out;
}

std::vector<CompiledGraph> compile_all(const std::vector<Graph>& graphs, std::int32_t steps, int threads) {
  std::vector<CompiledGraph> out(graphs.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), graphs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < graphs.size(); ++i) out[i] = compile(graphs[i], steps);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < graphs.size(); i += workers) out[i] = compile(graphs[i], steps);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::pair<Permutation, std::int32_t> min_bandwidth_bruteforce(const Graph& g) {
  if (g.num_nodes > 9) throw std::invalid_argument("brute-force bandwidth is limited to 9 nodes");
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (const Edge& e : g.edges) {
    if (e.src != e.dst) pairs.emplace_back(e.src, e.dst);
  }
  std::vector<NodeId> order(static_cast<std::size_t>(g.num_nodes));
  std::iota(order.begin(), order.end(), 0);
  std::vector<NodeId> pos(order.size());
  std::int32_t best = std::numeric_limits<std::int32_t>::max();
  std::vector<NodeId> best_order = order;
  do {
    for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<NodeId>(i);
    std::int32_t bw = 0;
    for (const auto& [a, b] : pairs) {
      bw = std::max(bw, std::abs(pos[static_cast<std::size_t>(a)] - pos[static_cast<std::size_t>(b)]));
      if (bw >= best) break;
    }
    if (bw < best) {
      best = bw;
      best_order = order;
    }
  } while (best > 0 && std::next_permutation(order.begin(), order.end()));
  return {Permutation::from_order(best_order), best};
}

CostEstimate cost_estimate(std::int64_t n, std::int64_t b, std::int64_t h, std::int64_t s, std::int64_t p,
                           std::int64_t t, std::int64_t bytes_per_scalar, std::int64_t byte_budget) {
  if (n < 0 || b < 0 || h <= 0 || s <= 0 || p <= 0 || t < 0 || bytes_per_scalar <= 0 || byte_budget < 0) {
    throw std::invalid_argument("cost_estimate: invalid arguments");
  }
  CostEstimate est;
  const auto nd = static_cast<double>(n);
  est.banded_cost = 3.0 * nd * static_cast<double>(b) * static_cast<double>(h);
  est.dense_cost = nd * nd * static_cast<double>(h);
  // Per node: T+1 embedding rows plus one row of each of the C, U, L
  // blocks for every edge type.
  const std::int64_t per_node = bytes_per_scalar * ((t + 1) * h + 3 * s * p);
  const std::int64_t max_nodes = byte_budget / per_node;
  est.memory_nodes = (max_nodes / s) * s;
  return est;
}

bool matches(const CompiledGraph& g, const FilterCriterion& criterion) {
  return std::visit(
      [&](const auto& c) {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, BandwidthBelow>) {
          return static_cast<std::int64_t>(g.bandwidth) < c.bound;
        } else {
          return static_cast<std::int64_t>(g.graph.num_nodes) < c.bound;
        }
      },
      criterion);
}

FilterResult filter_dataset(const std::vector<CompiledGraph>& graphs, const FilterCriterion& criterion) {
  FilterResult out;
  for (const auto& g : graphs) {
    if (matches(g, criterion)) out.graphs.push_back(g);
  }
  if (!graphs.empty()) {
    out.retained_fraction = static_cast<double>(out.graphs.size()) / static_cast<double>(graphs.size());
  }
  return out;
}

}  // namespace bandgnn
