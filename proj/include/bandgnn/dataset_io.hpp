// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Canonical JSONL graph records, compiled-dataset statistics and the
// best-effort converter for externally produced program graphs.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandgnn/compiler.hpp"

namespace bandgnn {

/// {"n", "p", "edges": [[type, src, dst], ...], "hole", "cands", "label",
/// "feat" (optional)}. Compiled records add "perm", "kept", "bandwidth",
/// "orig_n" and "orig_bandwidth".
nlohmann::json graph_to_json(const Graph& graph);
Graph graph_from_json(const nlohmann::json& record);  // validates
nlohmann::json compiled_to_json(const CompiledGraph& graph);
/// Throws when the compiled annotations are missing or inconsistent.
CompiledGraph compiled_from_json(const nlohmann::json& record);
bool is_compiled_record(const nlohmann::json& record);

std::string to_jsonl_line(const nlohmann::json& record);

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct JsonlRead {
  std::vector<nlohmann::json> records;
  std::vector<std::size_t> lines;  // 1-based source line per record
  std::vector<RecordError> errors;
};

/// Parses one JSON object per non-empty line; bad lines are reported, not thrown.
JsonlRead read_jsonl(std::istream& is);

struct GraphsRead {
  std::vector<Graph> graphs;
  std::vector<std::size_t> lines;
  std::vector<RecordError> errors;
};
GraphsRead read_graphs(std::istream& is);

struct CompiledRead {
  std::vector<CompiledGraph> graphs;
  std::vector<std::size_t> lines;
  std::vector<RecordError> errors;
};
CompiledRead read_compiled(std::istream& is);

void write_graphs(std::ostream& os, const std::vector<Graph>& graphs);
void write_compiled(std::ostream& os, const std::vector<CompiledGraph>& graphs);

/// Log-spaced integer histogram: bin i covers [edges[i], edges[i+1]).
struct Histogram {
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
};

/// Bins edges 1, base, base^2, ... up to the first edge above max_value;
/// values below 1 land in the first bin.
Histogram log_histogram(const std::vector<double>& values, double base = 2.0);

struct BoundFraction {
  std::int64_t bound = 0;
  double fraction = 0;
};

struct DatasetStats {
  std::size_t num_graphs = 0;
  std::int64_t max_nodes = 0;
  std::int64_t max_original_nodes = 0;
  std::int64_t max_bandwidth = 0;
  std::int64_t max_original_bandwidth = 0;
  std::vector<BoundFraction> fractions;  // share of graphs with bandwidth < bound
  Histogram node_counts;
  Histogram bandwidths;
  Histogram original_bandwidths;
  Histogram node_bandwidth_ratio;  // N / max(B, 1)
};

DatasetStats dataset_stats(const std::vector<CompiledGraph>& graphs, const std::vector<std::int64_t>& bounds);

void write_bounds_table(std::ostream& os, const DatasetStats& stats);
/// CSV: histogram,bin_lo,bin_hi,count for the four histograms.
void write_histograms_csv(std::ostream& os, const DatasetStats& stats);

/// Best-effort conversion of one program-graph sample in the
/// {"ContextGraph": {"Edges": {name: [[src, dst], ...]}}, "SlotDummyNode",
/// "SymbolCandidates": [{"SymbolDummyNode", "IsCorrect"}]} layout. Edge
/// type ids follow `edge_type_names`; unknown names are appended.
Graph convert_program_graph(const nlohmann::json& sample, std::vector<std::string>& edge_type_names);

}  // namespace bandgnn
