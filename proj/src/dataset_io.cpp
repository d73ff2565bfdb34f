// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace bandgnn {

using nlohmann::json;

json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const Edge& e : g.edges) edges.push_back({e.type, e.src, e.dst});
  json rec = json::object();
  rec["n"] = g.num_nodes;
  rec["p"] = g.num_edge_types;
  rec["edges"] = std::move(edges);
  rec["hole"] = g.hole;
  rec["cands"] = g.candidates;
  rec["label"] = g.label;
  if (!g.node_features.empty()) rec["feat"] = g.node_features;
  return rec;
}

Graph graph_from_json(const json& rec) {
  if (!rec.is_object()) throw std::invalid_argument("record is not a JSON object");
  for (const char* key : {"n", "p", "edges", "hole", "cands", "label"}) {
    if (!rec.contains(key)) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
  }
  Graph g;
  try {
    g.num_nodes = rec.at("n").get<std::int32_t>();
    g.num_edge_types = rec.at("p").get<std::int32_t>();
    for (const auto& e : rec.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw std::invalid_argument("edge must be [type, src, dst]");
      g.edges.push_back({e[0].get<EdgeType>(), e[1].get<NodeId>(), e[2].get<NodeId>()});
    }
    g.hole = rec.at("hole").get<NodeId>();
    g.candidates = rec.at("cands").get<std::vector<NodeId>>();
    g.label = rec.at("label").get<std::int32_t>();
    if (rec.contains("feat")) g.node_features = rec.at("feat").get<std::vector<std::int32_t>>();
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("malformed field: ") + ex.what());
  }
  validate_or_throw(g);
  return g;
}

bool is_compiled_record(const json& rec) { return rec.is_object() && rec.contains("bandwidth") && rec.contains("perm"); }

json compiled_to_json(const CompiledGraph& c) {
  json rec = graph_to_json(c.graph);
  rec["perm"] = c.perm.mapping();
  rec["kept"] = c.kept;
  rec["bandwidth"] = c.bandwidth;
  rec["orig_n"] = c.original_num_nodes;
  rec["orig_bandwidth"] = c.original_bandwidth;
  return rec;
}

CompiledGraph compiled_from_json(const json& rec) {
  if (!is_compiled_record(rec)) throw std::invalid_argument("record is not compiled (no bandwidth/perm fields)");
  CompiledGraph c;
  c.graph = graph_from_json(rec);
  try {
    c.perm = Permutation(rec.at("perm").get<std::vector<NodeId>>());
    c.bandwidth = rec.at("bandwidth").get<std::int32_t>();
    c.kept = rec.value("kept", std::vector<NodeId>{});
    c.original_num_nodes = rec.value("orig_n", c.graph.num_nodes);
    c.original_bandwidth = rec.value("orig_bandwidth", c.bandwidth);
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("malformed compiled field: ") + ex.what());
  }
  if (c.perm.size() != c.graph.num_nodes) throw std::invalid_argument("perm length does not match n");
  if (c.bandwidth != compute_bandwidth(c.graph)) throw std::invalid_argument("recorded bandwidth does not match edges");
  return c;
}

std::string to_jsonl_line(const json& rec) { return rec.dump(); }

JsonlRead read_jsonl(std::istream& is) {
  JsonlRead out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(json::parse(line));
      out.lines.push_back(n);
    } catch (const json::exception& ex) {
      out.errors.push_back({n, std::string("invalid JSON: ") + ex.what()});
    }
  }
  return out;
}

GraphsRead read_graphs(std::istream& is) {
  JsonlRead raw = read_jsonl(is);
  GraphsRead out;
  out.errors = std::move(raw.errors);
  for (std::size_t i = 0; i < raw.records.size(); ++i) {
    try {
      out.graphs.push_back(graph_from_json(raw.records[i]));
      out.lines.push_back(raw.lines[i]);
    } catch (const std::exception& ex) {
      out.errors.push_back({raw.lines[i], ex.what()});
    }
  }
  std::sort(out.errors.begin(), out.errors.end(), [](const auto& a, const auto& b) { return a.line < b.line; });
  return out;
}

CompiledRead read_compiled(std::istream& is) {
  JsonlRead raw = read_jsonl(is);
  CompiledRead out;
  out.errors = std::move(raw.errors);
  for (std::size_t i = 0; i < raw.records.size(); ++i) {
    try {
      out.graphs.push_back(compiled_from_json(raw.records[i]));
      out.lines.push_back(raw.lines[i]);
    } catch (const std::exception& ex) {
      out.errors.push_back({raw.lines[i], ex.what()});
    }
  }
  std::sort(out.errors.begin(), out.errors.end(), [](const auto& a, const auto& b) { return a.line < b.line; });
  return out;
}

void write_graphs(std::ostream& os, const std::vector<Graph>& graphs) {
  for (const auto& g : graphs) os << to_jsonl_line(graph_to_json(g)) << '\n';
}

void write_compiled(std::ostream& os, const std::vector<CompiledGraph>& graphs) {
  for (const auto& g : graphs) os << to_jsonl_line(compiled_to_json(g)) << '\n';
}

Histogram log_histogram(const std::vector<double>& values, double base) {
  if (!(base > 1.0)) throw std::invalid_argument("histogram base must exceed 1");
  Histogram h;
  double max_value = 1.0;
  for (double v : values) max_value = std::max(max_value, v);
  h.edges.push_back(1.0);
  while (h.edges.back() <= max_value) h.edges.push_back(h.edges.back() * base);
  h.counts.assign(h.edges.size() - 1, 0);
  for (double v : values) {
    const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    const std::size_t bin = it == h.edges.begin() ? 0 : static_cast<std::size_t>(it - h.edges.begin()) - 1;
    ++h.counts[std::min(bin, h.counts.size() - 1)];
  }
  return h;
}

DatasetStats dataset_stats(const std::vector<CompiledGraph>& graphs, const std::vector<std::int64_t>& bounds) {
  DatasetStats s;
  s.num_graphs = graphs.size();
  std::vector<double> nodes, bws, orig_bws, ratios;
  for (const auto& g : graphs) {
    s.max_nodes = std::max<std::int64_t>(s.max_nodes, g.graph.num_nodes);
    s.max_original_nodes = std::max<std::int64_t>(s.max_original_nodes, g.original_num_nodes);
    s.max_bandwidth = std::max<std::int64_t>(s.max_bandwidth, g.bandwidth);
    s.max_original_bandwidth = std::max<std::int64_t>(s.max_original_bandwidth, g.original_bandwidth);
    nodes.push_back(g.graph.num_nodes);
    bws.push_back(g.bandwidth);
    orig_bws.push_back(g.original_bandwidth);
    ratios.push_back(static_cast<double>(g.graph.num_nodes) / std::max(1, g.bandwidth));
  }
  std::vector<std::int64_t> sorted_bounds = bounds;
  std::sort(sorted_bounds.begin(), sorted_bounds.end());
  for (std::int64_t b : sorted_bounds) {
    std::size_t below = 0;
    for (const auto& g : graphs) below += g.bandwidth < b ? 1 : 0;
    s.fractions.push_back({b, graphs.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(graphs.size())});
  }
  s.node_counts = log_histogram(nodes);
  s.bandwidths = log_histogram(bws);
  s.original_bandwidths = log_histogram(orig_bws);
  s.node_bandwidth_ratio = log_histogram(ratios);
  return s;
}

void write_bounds_table(std::ostream& os, const DatasetStats& s) {
  os << "graphs: " << s.num_graphs << "\n"
     << "max nodes: " << s.max_nodes << " (before reachability: " << s.max_original_nodes << ")\n"
     << "max bandwidth: " << s.max_bandwidth << " (provided ordering: " << s.max_original_bandwidth << ")\n"
     << "bound,fraction_below\n";
  for (const auto& f : s.fractions) os << f.bound << ',' << std::fixed << std::setprecision(4) << f.fraction << '\n';
  os << std::defaultfloat;
}

void write_histograms_csv(std::ostream& os, const DatasetStats& s) {
  os << "histogram,bin_lo,bin_hi,count\n";
  auto dump = [&](const char* name, const Histogram& h) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      os << name << ',' << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
    }
  };
  dump("nodes", s.node_counts);
  dump("bandwidth", s.bandwidths);
  dump("original_bandwidth", s.original_bandwidths);
  dump("nodes_over_bandwidth", s.node_bandwidth_ratio);
}

namespace {

Graph convert_unchecked(const json& sample, std::vector<std::string>& names) {
  const json& ctx = sample.at("ContextGraph");
  Graph g;
  NodeId max_id = -1;
  auto type_of = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      names.push_back(name);
      return static_cast<EdgeType>(names.size() - 1);
    }
    return static_cast<EdgeType>(it - names.begin());
  };
  for (const auto& [name, list] : ctx.at("Edges").items()) {
    const EdgeType type = type_of(name);
    for (const auto& pair : list) {
      const NodeId src = pair.at(0).get<NodeId>();
      const NodeId dst = pair.at(1).get<NodeId>();
      g.edges.push_back({type, src, dst});
      max_id = std::max({max_id, src, dst});
    }
  }
  if (ctx.contains("NodeLabels")) {
    for (const auto& [key, value] : ctx.at("NodeLabels").items()) {
      (void)value;
      max_id = std::max(max_id, static_cast<NodeId>(std::stoi(key)));
    }
  }
  g.hole = sample.at("SlotDummyNode").get<NodeId>();
  max_id = std::max(max_id, g.hole);
  std::int32_t label = -1;
  for (const auto& cand : sample.at("SymbolCandidates")) {
    const NodeId id = cand.at("SymbolDummyNode").get<NodeId>();
    max_id = std::max(max_id, id);
    if (cand.value("IsCorrect", false)) label = static_cast<std::int32_t>(g.candidates.size());
    g.candidates.push_back(id);
  }
  if (label < 0) throw std::invalid_argument("sample has no correct candidate");
  g.label = label;
  g.num_nodes = max_id + 1;
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  // Edge-type count is fixed by the caller once all samples are seen.
  g.num_edge_types = static_cast<std::int32_t>(std::max<std::size_t>(names.size(), 1));
  return g;
}

}  // namespace

Graph convert_program_graph(const json& sample, std::vector<std::string>& names) {
  try {
    return convert_unchecked(sample, names);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("program graph: ") + e.what());
  }
}

}  // namespace bandgnn
