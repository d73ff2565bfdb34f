// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Momentum SGD with the full regularisation surface, simulated synchronous
// data-parallel replicas, the training loop and evaluation.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandgnn/compiler.hpp"
#include "bandgnn/model.hpp"

namespace bandgnn {

/// Raised when a loss or gradient stops being finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  bool use_nesterov = true;
  double gradient_clip = 1.0;  // global-norm bound
  double weight_decay = 0.0;
  std::int64_t lr_decay_steps = 2000;
  double end_lr_factor = 0.1;
  double label_smoothing = 0.0;
  double dropout_keep_prob = 1.0;

  void validate() const;
};

struct TrainState {
  ModelParams params;
  ModelParams velocity;
  std::int64_t step = 0;
  std::uint64_t rng_seed = 0;

  static TrainState fresh(const ModelConfig& config, std::uint64_t seed);
};

/// eta0 * (1 - min(step, D)/D * (1 - f)).
double lr_schedule(std::int64_t step, const OptimizerConfig& cfg);

double global_norm(const ModelParams& grad);

/// grad <- grad * min(1, c/|grad|), v <- mu v + grad,
/// params <- params - eta (mu v + grad) with Nesterov, else - eta v.
/// Throws NumericalError on a non-finite gradient.
void sgd_step(TrainState& state, const ModelParams& grad, const OptimizerConfig& cfg);

struct ReplicaGradient {
  double loss = 0;  // graph-weighted mean
  ModelParams grad;
  std::size_t num_graphs = 0;
};

/// Per-replica loss_and_grad, aggregated as sum_r n_r g_r / sum_r n_r with
/// n_r the member count of replica r. Replica r uses dropout seed
/// seed + r. `threads` > 1 evaluates replicas concurrently; the reduction
/// order is fixed.
ReplicaGradient parallel_grad(const std::vector<PreparedBatch>& replicas, const ModelParams& params,
                              const ModelConfig& config, std::uint64_t seed, int threads = 1);

/// Thread-safe CSV sink: step,loss,lr,grad_norm,graphs_per_sec,eval_accuracy.
class MetricsLog {
 public:
  struct Row {
    std::int64_t step = 0;
    double loss = 0;
    double lr = 0;
    double grad_norm = 0;
    std::optional<double> graphs_per_sec;
    std::optional<double> eval_accuracy;
  };

  static constexpr const char* kHeader = "step,loss,lr,grad_norm,graphs_per_sec,eval_accuracy";

  void emit(const Row& row);
  std::vector<Row> rows() const;
  void write_csv(std::ostream& os) const;
  std::string csv() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Row> rows_;
};

struct TrainOptions {
  std::int64_t steps = 2000;
  std::int32_t replicas = 1;
  std::int32_t node_budget = 256;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Omit wall-clock throughput so the metrics log is reproducible bit for bit.
  bool deterministic = false;
  std::int64_t eval_every = 0;  // 0 disables periodic evaluation
  std::int64_t log_every = 1;
};

using EvalHook = std::function<std::optional<double>(std::int64_t step, const ModelParams& params)>;

struct TrainResult {
  TrainState state;
  std::vector<MetricsLog::Row> metrics;
  std::int64_t graphs_seen = 0;
  std::int64_t epochs_started = 0;
  std::int64_t dropped_edges = 0;
  std::int64_t total_edges = 0;
};

/// Epoch loop: seeded graph-level shuffle, in-order packing into supergraphs
/// of `node_budget` nodes, `replicas` supergraphs per optimizer step.
/// Edges outside the covered band are dropped (lossy mode); filter the
/// dataset beforehand for the lossless regime.
TrainResult train(const std::vector<CompiledGraph>& graphs, const OptimizerConfig& cfg, const ModelConfig& model_config,
                  const TrainOptions& options, const EvalHook& eval_hook = {}, MetricsLog* log = nullptr,
                  std::optional<TrainState> resume = std::nullopt);

/// Merges the regularisation fields of the optimizer config into the model config.
ModelConfig effective_model_config(const ModelConfig& model_config, const OptimizerConfig& cfg);

/// Fraction of logit rows whose first argmax equals the label.
double accuracy_from_logits(const std::vector<std::vector<double>>& logits, const std::vector<std::int32_t>& labels);

/// Sparse-backend accuracy over all edges, dropout off.
double evaluate(const std::vector<Graph>& graphs, const ModelParams& params, const ModelConfig& config);
double evaluate(const std::vector<CompiledGraph>& graphs, const ModelParams& params, const ModelConfig& config);

/// Same as evaluate() but with the banded backend at config.block_size,
/// so out-of-band edges are ignored.
double evaluate_banded(const std::vector<Graph>& graphs, const ModelParams& params, const ModelConfig& config);

/// Per-graph logits on the given backend.
std::vector<std::vector<double>> predict_logits(const std::vector<Graph>& graphs, const ModelParams& params,
                                                const ModelConfig& config, Backend backend);

// ---------------------------------------------------------------------------
// Synthetic candidate-selection task

struct SynthOptions {
  std::int32_t num_graphs = 1000;
  std::int32_t min_nodes = 12;
  std::int32_t max_nodes = 24;
  std::int32_t num_candidates = 4;
  std::int32_t edge_types = 2;
  std::int32_t max_path = 3;      // longest hole -> candidate chain
  std::int32_t num_features = 4;  // node feature ids drawn from [0, num_features)
  std::uint64_t seed = 0;
};

/// Random graphs where exactly one candidate is reached from the hole by a
/// chain of type-0 edges; every other candidate is reached from the hole
/// only through a type-1 chain and from a decoy through a type-0 chain.
/// Node counts are uniform in [min_nodes, max_nodes]. Requires
/// edge_types >= 2 and min_nodes >= 1 + 2 * num_candidates.
std::vector<Graph> synth_task(const SynthOptions& options);

/// Non-learned solver: BFS from the hole over type-0 edges (depth <= steps)
/// and pick the first candidate reached; -1 when none is.
std::int32_t bfs_oracle(const Graph& graph, std::int32_t steps);

}  // namespace bandgnn
