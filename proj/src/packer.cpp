// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/packer.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace bandgnn {

std::int32_t Supergraph::used_nodes() const {
  std::int32_t used = 0;
  for (const auto& m : members) used += m.num_nodes;
  return used;
}

namespace {

std::int32_t round_up(std::int32_t n, std::int32_t multiple) { return (n + multiple - 1) / multiple * multiple; }

void append_member(Supergraph& sg, const Graph& g, std::size_t id) {
  SupergraphMember m;
  m.id = id;
  m.offset = sg.num_nodes;
  m.num_nodes = g.num_nodes;
  m.hole = g.hole + m.offset;
  m.label = g.label;
  for (NodeId c : g.candidates) m.candidates.push_back(c + m.offset);
  for (const Edge& e : g.edges) sg.edges.push_back({e.type, e.src + m.offset, e.dst + m.offset});
  for (NodeId v = 0; v < g.num_nodes; ++v) sg.node_features.push_back(g.feature(v));
  sg.num_nodes += g.num_nodes;
  sg.members.push_back(std::move(m));
}

void finish(Supergraph& sg) {
  const std::int32_t padded = std::max(sg.block_size, round_up(sg.num_nodes, sg.block_size));
  sg.node_features.resize(static_cast<std::size_t>(padded), 0);
  sg.num_nodes = padded;
}

}  // namespace

std::vector<Supergraph> pack_supergraphs(const std::vector<const Graph*>& graphs, std::int32_t node_budget,
                                         std::int32_t block_size, const std::vector<std::size_t>& ids) {
  if (block_size <= 0) throw std::invalid_argument("block size must be positive");
  if (node_budget <= 0 || node_budget % block_size != 0) {
    throw std::invalid_argument("node budget must be a positive multiple of the block size");
  }
  if (!ids.empty() && ids.size() != graphs.size()) throw std::invalid_argument("ids length mismatch");

  std::vector<Supergraph> out;
  Supergraph current;
  auto start = [&] {
    current = Supergraph{};
    current.block_size = block_size;
    current.node_budget = node_budget;
    current.num_edge_types = 0;
  };
  start();
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = *graphs[i];
    const std::size_t id = ids.empty() ? i : ids[i];
    if (g.num_nodes > node_budget) {
      throw std::invalid_argument("graph " + std::to_string(id) + " has " + std::to_string(g.num_nodes) +
                                  " nodes, more than the node budget " + std::to_string(node_budget));
    }
    if (current.num_nodes + g.num_nodes > node_budget) {
      finish(current);
      out.push_back(std::move(current));
      start();
    }
    if (current.members.empty()) {
      current.num_edge_types = g.num_edge_types;
    } else if (current.num_edge_types != g.num_edge_types) {
      throw std::invalid_argument("graph " + std::to_string(id) + " has a different edge-type count");
    }
    append_member(current, g, id);
  }
  if (!current.members.empty()) {
    finish(current);
    out.push_back(std::move(current));
  }
  return out;
}

std::vector<Supergraph> pack_supergraphs(const std::vector<CompiledGraph>& graphs, std::int32_t node_budget,
                                         std::int32_t block_size) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g.graph);
  return pack_supergraphs(ptrs, node_budget, block_size);
}

Supergraph single_supergraph(const Graph& graph, std::int32_t block_size, std::size_t id) {
  const std::int32_t budget = std::max(block_size, round_up(graph.num_nodes, block_size));
  return pack_supergraphs(std::vector<const Graph*>{&graph}, budget, block_size, {id}).front();
}

bool edge_retained(NodeId src, NodeId dst, std::int32_t block_size) {
  return std::abs(dst / block_size - src / block_size) <= 1;
}

template <typename T>
BandedExtraction<T> extract_banded(const Supergraph& sg, std::int32_t block_size) {
  if (block_size <= 0 || sg.num_nodes % block_size != 0 || sg.num_nodes == 0) {
    throw std::invalid_argument("extract_banded: supergraph size " + std::to_string(sg.num_nodes) +
                                " is not a positive multiple of block size " + std::to_string(block_size));
  }
  const std::size_t S = static_cast<std::size_t>(block_size);
  const std::size_t K = static_cast<std::size_t>(sg.num_nodes) / S;
  const std::size_t P = static_cast<std::size_t>(sg.num_edge_types);

  BandedExtraction<T> out;
  BandedBlocks<T>& b = out.blocks;
  b.num_blocks = static_cast<std::int32_t>(K);
  b.block_size = block_size;
  b.num_edge_types = sg.num_edge_types;
  b.diagonal = DenseArray<T>({K, S * P, S});
  b.upper = DenseArray<T>({K - 1, S * P, S});
  b.lower = DenseArray<T>({K - 1, S * P, S});
  b.in_degree = DenseArray<T>({K * S, P});

  auto cell = [&](DenseArray<T>& arr, std::size_t k, std::size_t dst_local, std::size_t type, std::size_t src_local) -> T& {
    return arr[(k * S * P + dst_local * P + type) * S + src_local];
  };

  for (const Edge& e : sg.edges) {
    const auto i = static_cast<std::size_t>(e.dst);
    const auto j = static_cast<std::size_t>(e.src);
    const auto p = static_cast<std::size_t>(e.type);
    const std::size_t ki = i / S;
    const std::size_t kj = j / S;
    const std::size_t dist = i > j ? i - j : j - i;
    if (dist < S) {
      ++out.coverage.always_covered;
    } else if (dist < 2 * S) {
      ++out.coverage.maybe_covered;
    } else {
      ++out.coverage.never_covered;
    }

    T* slot = nullptr;
    if (ki == kj) {
      slot = &cell(b.diagonal, ki, i % S, p, j % S);
    } else if (kj == ki + 1) {
      slot = &cell(b.upper, ki, i % S, p, j % S);
    } else if (ki == kj + 1) {
      slot = &cell(b.lower, kj, i % S, p, j % S);
    }
    if (slot == nullptr) {
      b.dropped_edges.push_back(e);
      ++out.coverage.actually_dropped;
      continue;
    }
    *slot = T{1};
    b.in_degree[i * P + p] += T{1};
    ++b.retained_edges;
  }
  return out;
}

template <typename T>
std::vector<Edge> reconstruct_edges(const BandedBlocks<T>& b) {
  const std::size_t S = static_cast<std::size_t>(b.block_size);
  const std::size_t K = static_cast<std::size_t>(b.num_blocks);
  const std::size_t P = static_cast<std::size_t>(b.num_edge_types);
  std::vector<Edge> edges;
  auto scan = [&](const DenseArray<T>& arr, std::size_t batches, auto dst_block, auto src_block) {
    for (std::size_t k = 0; k < batches; ++k) {
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t p = 0; p < P; ++p) {
          for (std::size_t c = 0; c < S; ++c) {
            if (arr[(k * S * P + s * P + p) * S + c] != T{0}) {
              edges.push_back({static_cast<EdgeType>(p), static_cast<NodeId>(src_block(k) * S + c),
                               static_cast<NodeId>(dst_block(k) * S + s)});
            }
          }
        }
      }
    }
  };
  auto same = [](std::size_t k) { return k; };
  auto next = [](std::size_t k) { return k + 1; };
  scan(b.diagonal, K, same, same);
  if (K > 1) {
    scan(b.upper, K - 1, same, next);
    scan(b.lower, K - 1, next, same);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

template BandedExtraction<float> extract_banded<float>(const Supergraph&, std::int32_t);
template BandedExtraction<double> extract_banded<double>(const Supergraph&, std::int32_t);
template std::vector<Edge> reconstruct_edges<float>(const BandedBlocks<float>&);
template std::vector<Edge> reconstruct_edges<double>(const BandedBlocks<double>&);

}  // namespace bandgnn
