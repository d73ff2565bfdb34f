// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "bandgnn/compiler.hpp"
#include "bandgnn/trainer.hpp"
#include "support.hpp"

using namespace bandgnn;

namespace {

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace

TEST_CASE("reachability_reduce removes nodes without a short path to a candidate") {
  // v9 -> v8 -> ... -> v0, candidate v0, hole v5
  Graph g;
  g.num_nodes = 10;
  for (NodeId i = 9; i > 0; --i) g.edges.push_back({0, i, i - 1});
  g.hole = 5;
  g.candidates = {0};
  std::vector<NodeId> kept;
  const Graph r = reachability_reduce(g, 8, &kept);
  CHECK(r.num_nodes == 9);
  CHECK(kept == std::vector<NodeId>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(compute_bandwidth(r) == 1);
  CHECK(r.hole == 5);

  // a dead-end node and a hole that reaches nothing are handled
  Graph h;
  h.num_nodes = 4;
  h.edges = {{0, 1, 2}, {0, 3, 0}};
  h.hole = 0;
  h.candidates = {2};
  const Graph rh = reachability_reduce(h, 8, &kept);
  CHECK(kept == std::vector<NodeId>{0, 1, 2});
  CHECK(rh.edges == std::vector<Edge>{{0, 1, 2}});
}

TEST_CASE("reachability_reduce matches boolean matrix powering") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = testing::random_graph(rng, 50, 2, 0.012, -1, 2);
    for (std::int32_t T : {1, 2, 3, 8}) {
      std::vector<NodeId> kept;
      const Graph r = reachability_reduce(g, T, &kept);
      CHECK(kept == testing::reachable_by_matrix_power(g, T));
      CHECK(r.num_nodes == static_cast<std::int32_t>(kept.size()));
      CHECK_FALSE(validate(r).has_value());
    }
  }
}

TEST_CASE("reachability pruning leaves reference logits unchanged") {
  std::mt19937_64 rng(23);
  ModelConfig mc;
  mc.hidden = 6;
  mc.steps = 8;
  mc.edge_types = 2;
  mc.block_size = 4;
  mc.num_features = 3;
  const ModelParams params = testing::random_params(mc, 99);
  std::vector<Graph> full, reduced;
  for (int trial = 0; trial < 10; ++trial) {
    full.push_back(testing::random_graph(rng, 30, 2, 0.02, -1, 3, 3));
    reduced.push_back(reachability_reduce(full.back(), mc.steps));
  }
  const auto a = flatten(predict_logits(full, params, mc, Backend::Sparse));
  const auto b = flatten(predict_logits(reduced, params, mc, Backend::Sparse));
  CHECK(testing::max_rel_diff(a, b) <= 1e-12);
}

TEST_CASE("rcmk_order on paths and stars") {
  const Graph shuffled = testing::relabel(testing::path_graph(7), {4, 0, 6, 2, 5, 1, 3});
  CHECK(compute_bandwidth(shuffled) > 1);
  CHECK(compute_bandwidth(apply_permutation(shuffled, rcmk_order(shuffled))) == 1);
  CHECK(testing::exhaustive_min_bandwidth(shuffled) == 1);

  // K_{1,4}: optimum 2; classic RCMK numbers the hub after at least two
  // leaves on one side only, giving 3, which is within the 1.5x bound.
  const Graph star = testing::star_graph(4);
  CHECK(testing::exhaustive_min_bandwidth(star) == 2);
  const std::int32_t b = compute_bandwidth(apply_permutation(star, rcmk_order(star)));
  CHECK(b <= 3);
  CHECK(b >= 2);
}

TEST_CASE("rcmk_order is a valid permutation with contiguous components") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<std::int32_t>(2 + rng() % 40);
    const Graph g = testing::random_graph(rng, n, 2, 1.5 / n);
    const Permutation p = rcmk_order(g);
    REQUIRE(p.size() == n);
    std::set<NodeId> seen(p.mapping().begin(), p.mapping().end());
    CHECK(seen.size() == static_cast<std::size_t>(n));

    // component labels via union-find on the undirected union
    std::vector<NodeId> parent(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    std::function<NodeId(NodeId)> find = [&](NodeId x) {
      auto& px = parent[static_cast<std::size_t>(x)];
      return px == x ? x : px = find(px);
    };
    for (const Edge& e : g.edges) parent[static_cast<std::size_t>(find(e.src))] = find(e.dst);
    std::vector<NodeId> by_position(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) by_position[static_cast<std::size_t>(p[i])] = find(i);
    std::set<NodeId> closed;
    for (std::size_t pos = 0; pos < by_position.size(); ++pos) {
      if (pos > 0 && by_position[pos] != by_position[pos - 1]) closed.insert(by_position[pos - 1]);
      CHECK(closed.count(by_position[pos]) == 0);
    }
  }
}

TEST_CASE("rcmk_order is deterministic") {
  std::mt19937_64 rng(3);
  const Graph g = testing::random_graph(rng, 40, 3, 0.05);
  CHECK(rcmk_order(g) == rcmk_order(g));
}

TEST_CASE("compile") {
  Graph g;
  g.num_nodes = 5;
  g.hole = 0;
  g.candidates = {3};
  const CompiledGraph c = compile(g, 8);
  CHECK(c.graph.num_nodes == 2);
  CHECK(c.bandwidth == 0);
  CHECK(c.original_num_nodes == 5);
  CHECK(c.kept == std::vector<NodeId>{0, 3});
}

TEST_CASE("curated suite: compile never worsens the provided ordering and is idempotent") {
  for (const Graph& g : testing::curated_suite()) {
    REQUIRE_FALSE(validate(g).has_value());
    const CompiledGraph c = compile(g, 8);
    CHECK(c.graph.num_nodes == g.num_nodes);
    CHECK(c.bandwidth == compute_bandwidth(c.graph));
    CHECK(c.bandwidth <= compute_bandwidth(g));
    CHECK(c.original_bandwidth == compute_bandwidth(g));
    const CompiledGraph again = compile(c.graph, 8);
    CHECK(again.bandwidth <= c.bandwidth);
  }
}

TEST_CASE("compiled logits equal permuted logits of the reduced original") {
  std::mt19937_64 rng(41);
  ModelConfig mc;
  mc.hidden = 5;
  mc.steps = 4;
  mc.edge_types = 2;
  mc.num_features = 2;
  const ModelParams params = testing::random_params(mc, 7);
  std::vector<Graph> reduced, compiled;
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = testing::random_graph(rng, 25, 2, 0.04, -1, 3, 2);
    reduced.push_back(reachability_reduce(g, 4));
    const CompiledGraph c = compile(g, 4);
    CHECK(apply_permutation(reduced.back(), c.perm) == c.graph);
    compiled.push_back(c.graph);
  }
  const auto a = flatten(predict_logits(reduced, params, mc, Backend::Sparse));
  const auto b = flatten(predict_logits(compiled, params, mc, Backend::Sparse));
  CHECK(testing::max_rel_diff(b, a) <= 1e-12);
}

TEST_CASE("compile_all output does not depend on the thread count") {
  SynthOptions so;
  so.num_graphs = 60;
  so.seed = 4;
  const auto graphs = synth_task(so);
  const auto one = compile_all(graphs, 8, 1);
  const auto four = compile_all(graphs, 8, 4);
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].graph == four[i].graph);
    CHECK(one[i].perm == four[i].perm);
  }
}

TEST_CASE("min_bandwidth_bruteforce") {
  CHECK(min_bandwidth_bruteforce(testing::path_graph(4)).second == 1);
  CHECK(min_bandwidth_bruteforce(testing::complete_graph(4)).second == 3);
  CHECK(min_bandwidth_bruteforce(testing::star_graph(4)).second == 2);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 15; ++trial) {
    const auto n = static_cast<std::int32_t>(2 + rng() % 6);
    const Graph g = testing::random_graph(rng, n, 2, 0.3);
    const auto [perm, best] = min_bandwidth_bruteforce(g);
    CHECK(best == testing::exhaustive_min_bandwidth(g));
    CHECK(compute_bandwidth(apply_permutation(g, perm)) == best);
  }
}

TEST_CASE("cost_estimate") {
  const CostEstimate at_third = cost_estimate(300, 100, 32, 128, 2, 8, 4, 1 << 30);
  CHECK(at_third.banded_cost == at_third.dense_cost);
  CHECK(cost_estimate(300, 0, 32, 128, 2, 8, 4, 1 << 30).banded_cost == 0);
  for (std::int64_t b : {1, 7, 50, 299}) {
    const CostEstimate c = cost_estimate(300, b, 16, 64, 2, 8, 4, 1 << 30);
    CHECK(c.banded_cost / c.dense_cost == doctest::Approx(3.0 * b / 300).epsilon(1e-15));
  }
  // 16 GB budget, 4-byte scalars, H=128, P=2, T=8
  std::int64_t prev = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t s : {128, 256, 512, 1024}) {
    const CostEstimate c = cost_estimate(10000, s, 128, s, 2, 8, 4, 16LL << 30);
    CHECK(c.memory_nodes % s == 0);
    CHECK(c.memory_nodes <= prev);
    CHECK(c.memory_nodes > 0);
    prev = c.memory_nodes;
  }
}

TEST_CASE("filter_dataset") {
  auto make = [](std::int32_t bw, std::int32_t n) {
    CompiledGraph c;
    c.bandwidth = bw;
    c.graph.num_nodes = n;
    return c;
  };
  const std::vector<CompiledGraph> graphs{make(3, 10), make(9, 4), make(4, 20)};
  const FilterResult all = filter_dataset(graphs, BandwidthBelow{});
  CHECK(all.graphs.size() == 3);
  CHECK(all.retained_fraction == 1.0);

  const FilterResult bw = filter_dataset(graphs, BandwidthBelow{5});
  REQUIRE(bw.graphs.size() == 2);
  CHECK(bw.graphs[0].bandwidth == 3);
  CHECK(bw.graphs[1].bandwidth == 4);
  CHECK(bw.retained_fraction == doctest::Approx(2.0 / 3.0));

  const FilterResult order = filter_dataset(graphs, OrderBelow{11});
  CHECK(order.graphs.size() == 2);
  CHECK(filter_dataset({}, BandwidthBelow{5}).retained_fraction == 1.0);
}
