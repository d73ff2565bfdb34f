// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "bandgnn/trainer.hpp"

namespace bandgnn {

namespace {

std::int32_t uniform_int(std::mt19937_64& rng, std::int32_t lo, std::int32_t hi) {
  return lo + static_cast<std::int32_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

Graph synth_graph(const SynthOptions& opt, std::mt19937_64& rng) {
  const std::int32_t C = opt.num_candidates;
  const std::int32_t target = uniform_int(rng, opt.min_nodes, opt.max_nodes);

  Graph g;
  g.num_edge_types = opt.edge_types;
  std::int32_t next = 0;
  const NodeId hole = next++;
  std::vector<NodeId> cands;
  for (std::int32_t i = 0; i < C; ++i) cands.push_back(next++);
  const std::int32_t correct = uniform_int(rng, 0, C - 1);

  std::set<std::tuple<EdgeType, NodeId, NodeId>> edges;
  std::vector<char> hole_reachable{1};  // grows with `next`
  hole_reachable.resize(static_cast<std::size_t>(next), 0);
  hole_reachable[0] = 1;
  auto new_node = [&](bool reachable) {
    hole_reachable.push_back(reachable ? 1 : 0);
    return next++;
  };
  // hole, candidates and one decoy source per candidate are always present
  std::int32_t spare = target - (1 + 2 * C);
  auto chain = [&](NodeId source, NodeId target_node, EdgeType type, bool from_hole) {
    const std::int32_t length = uniform_int(rng, 1, std::min(opt.max_path, 1 + spare));
    spare -= length - 1;
    NodeId prev = source;
    for (std::int32_t k = 1; k < length; ++k) {
      NodeId mid = new_node(from_hole);
      edges.emplace(type, prev, mid);
      prev = mid;
    }
    edges.emplace(type, prev, target_node);
  };

  for (std::int32_t i = 0; i < C; ++i) {
    const bool is_correct = i == correct;
    // Type-0 chain: from the hole only into the correct candidate.
    chain(is_correct ? hole : new_node(false), cands[static_cast<std::size_t>(i)], 0, is_correct);
    // Type-1 chain: from the hole into every other candidate.
    chain(is_correct ? new_node(false) : hole, cands[static_cast<std::size_t>(i)], 1, !is_correct);
  }
  for (NodeId c : cands) hole_reachable[static_cast<std::size_t>(c)] = 1;
  while (next < target) new_node(false);

  // Noise edges only leave nodes the hole cannot reach, so the set of
  // type-0 paths out of the hole is exactly the designed chain.
  std::vector<NodeId> sources;
  for (NodeId v = 0; v < next; ++v) {
    if (!hole_reachable[static_cast<std::size_t>(v)]) sources.push_back(v);
  }
  if (!sources.empty()) {
    const std::int32_t noise = next;
    for (std::int32_t k = 0; k < noise; ++k) {
      const NodeId src = sources[rng() % sources.size()];
      const NodeId dst = uniform_int(rng, 0, next - 1);
      if (src == dst) continue;
      const auto type = static_cast<EdgeType>(rng() % static_cast<std::uint64_t>(opt.edge_types));
      edges.emplace(type, src, dst);
    }
  }

  g.num_nodes = next;
  for (const auto& [type, src, dst] : edges) g.edges.push_back({type, src, dst});
  g.hole = hole;
  g.candidates = cands;
  g.label = correct;
  g.node_features.resize(static_cast<std::size_t>(next));
  for (auto& f : g.node_features) f = uniform_int(rng, 0, opt.num_features - 1);

  // Random relabelling so the provided ordering carries no structure.
  std::vector<NodeId> order(static_cast<std::size_t>(next));
  for (NodeId v = 0; v < next; ++v) order[static_cast<std::size_t>(v)] = v;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  Graph out = apply_permutation(g, Permutation::from_order(order));
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace

std::vector<Graph> synth_task(const SynthOptions& opt) {
  if (opt.num_graphs < 0 || opt.num_candidates <= 0 || opt.min_nodes <= 0 || opt.max_nodes < opt.min_nodes ||
      opt.max_path <= 0 || opt.num_features <= 0) {
    throw std::invalid_argument("synth_task: parameters must be positive and min_nodes <= max_nodes");
  }
  if (opt.edge_types < 2) throw std::invalid_argument("synth_task: needs at least two edge types");
  if (opt.min_nodes < 1 + 2 * opt.num_candidates) {
    throw std::invalid_argument("synth_task: min_nodes must be at least 1 + 2 * num_candidates");
  }
  std::mt19937_64 rng(opt.seed);
  std::vector<Graph> graphs;
  graphs.reserve(static_cast<std::size_t>(opt.num_graphs));
  for (std::int32_t i = 0; i < opt.num_graphs; ++i) graphs.push_back(synth_graph(opt, rng));
  return graphs;
}

std::int32_t bfs_oracle(const Graph& g, std::int32_t steps) {
  std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(g.num_nodes));
  for (const Edge& e : g.edges) {
    if (e.type == 0) out[static_cast<std::size_t>(e.src)].push_back(e.dst);
  }
  std::vector<std::int32_t> dist(static_cast<std::size_t>(g.num_nodes), -1);
  std::deque<NodeId> queue{g.hole};
  dist[static_cast<std::size_t>(g.hole)] = 0;
  while (!queue.empty()) {
    NodeId v = queue.front();
    queue.pop_front();
    const auto it = std::find(g.candidates.begin(), g.candidates.end(), v);
    if (it != g.candidates.end()) return static_cast<std::int32_t>(it - g.candidates.begin());
    if (dist[static_cast<std::size_t>(v)] == steps) continue;
    for (NodeId u : out[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(u);
      }
    }
  }
  return -1;
}

}  // namespace bandgnn
