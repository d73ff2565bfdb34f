// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace bandgnn {

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!(gradient_clip > 0.0)) throw std::invalid_argument("gradient_clip must be positive");
  if (!(end_lr_factor > 0.0 && end_lr_factor <= 1.0)) throw std::invalid_argument("end_lr_factor must be in (0, 1]");
  if (lr_decay_steps < 1) throw std::invalid_argument("lr_decay_steps must be at least 1");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be nonnegative");
  if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) throw std::invalid_argument("label_smoothing must be in [0, 0.5)");
  if (!(dropout_keep_prob > 0.0 && dropout_keep_prob <= 1.0)) throw std::invalid_argument("dropout_keep_prob must be in (0, 1]");
}

TrainState TrainState::fresh(const ModelConfig& config, std::uint64_t seed) {
  TrainState s;
  s.params = ModelParams::init(config, seed);
  s.velocity = ModelParams::zeros(config);
  s.rng_seed = seed;
  return s;
}

double lr_schedule(std::int64_t step, const OptimizerConfig& cfg) {
  const double d = static_cast<double>(cfg.lr_decay_steps);
  const double progress = static_cast<double>(std::min<std::int64_t>(std::max<std::int64_t>(step, 0), cfg.lr_decay_steps)) / d;
  return cfg.learning_rate * (1.0 - progress * (1.0 - cfg.end_lr_factor));
}

double global_norm(const ModelParams& grad) { return std::sqrt(grad.squared_norm()); }

void sgd_step(TrainState& state, const ModelParams& grad, const OptimizerConfig& cfg) {
  const double norm = global_norm(grad);
  if (!std::isfinite(norm)) {
    throw NumericalError("non-finite gradient at step " + std::to_string(state.step));
  }
  const double clip = norm > cfg.gradient_clip ? cfg.gradient_clip / norm : 1.0;
  const double lr = lr_schedule(state.step, cfg);
  const double mu = cfg.momentum;

  std::vector<const DenseArray<double>*> g;
  grad.for_each([&](std::string_view, const DenseArray<double>& a) { g.push_back(&a); });
  std::vector<DenseArray<double>*> v;
  state.velocity.for_each([&](std::string_view, DenseArray<double>& a) { v.push_back(&a); });
  std::size_t idx = 0;
  state.params.for_each([&](std::string_view name, DenseArray<double>& p) {
    const DenseArray<double>& gi = *g[idx];
    DenseArray<double>& vi = *v[idx];
    ++idx;
    if (gi.shape() != p.shape() || vi.shape() != p.shape()) {
      throw std::invalid_argument("sgd_step: shape mismatch in " + std::string(name));
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = clip * gi[k];
      vi[k] = mu * vi[k] + gk;
      const double update = cfg.use_nesterov ? mu * vi[k] + gk : vi[k];
      p[k] -= lr * update;
    }
  });
  ++state.step;
}

ReplicaGradient parallel_grad(const std::vector<PreparedBatch>& replicas, const ModelParams& params,
                              const ModelConfig& config, std::uint64_t seed, int threads) {
  if (replicas.empty()) throw std::invalid_argument("parallel_grad: no replicas");
  std::vector<LossAndGrad> parts(replicas.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), replicas.size());
  auto run = [&](std::size_t r) { parts[r] = loss_and_grad(replicas[r], params, config, seed + r, true); };
  if (workers <= 1) {
    for (std::size_t r = 0; r < replicas.size(); ++r) run(r);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = w; r < replicas.size(); r += workers) run(r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  ReplicaGradient out;
  out.grad = ModelParams::zeros(config);
  for (const auto& part : parts) out.num_graphs += part.num_graphs;
  if (out.num_graphs == 0) throw std::invalid_argument("parallel_grad: replicas hold no graphs");
  const double total = static_cast<double>(out.num_graphs);
  for (const auto& part : parts) {
    const double weight = static_cast<double>(part.num_graphs) / total;
    out.grad.add_scaled(part.grad, weight);
    out.loss += weight * part.loss;
  }
  return out;
}

// ---------------------------------------------------------------------------

void MetricsLog::emit(const Row& row) {
  std::lock_guard<std::mutex> lock(mutex_);
  rows_.push_back(row);
}

std::vector<MetricsLog::Row> MetricsLog::rows() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return rows_;
}

void MetricsLog::write_csv(std::ostream& os) const {
  std::lock_guard<std::mutex> lock(mutex_);
  os << kHeader << '\n';
  for (const auto& r : rows_) {
    os << r.step << ',' << std::setprecision(17) << r.loss << ',' << r.lr << ',' << r.grad_norm << ',';
    if (r.graphs_per_sec) os << std::setprecision(6) << *r.graphs_per_sec;
    os << ',';
    if (r.eval_accuracy) os << std::setprecision(17) << *r.eval_accuracy;
    os << '\n';
  }
}

std::string MetricsLog::csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

// ---------------------------------------------------------------------------

ModelConfig effective_model_config(const ModelConfig& model_config, const OptimizerConfig& cfg) {
  ModelConfig m = model_config;
  m.label_smoothing = cfg.label_smoothing;
  m.dropout_keep_prob = cfg.dropout_keep_prob;
  m.weight_decay = cfg.weight_decay;
  return m;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void shuffle_indices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

TrainResult train(const std::vector<CompiledGraph>& graphs, const OptimizerConfig& cfg, const ModelConfig& model_config,
                  const TrainOptions& options, const EvalHook& eval_hook, MetricsLog* log,
                  std::optional<TrainState> resume) {
  cfg.validate();
  const ModelConfig config = effective_model_config(model_config, cfg);
  config.validate();
  if (graphs.empty()) throw std::invalid_argument("train: empty dataset");
  if (options.replicas <= 0) throw std::invalid_argument("train: replicas must be positive");
  if (options.node_budget % config.block_size != 0) {
    throw std::invalid_argument("train: node budget must be a multiple of the block size");
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].graph.num_nodes > options.node_budget) {
      throw std::invalid_argument("train: graph " + std::to_string(i) + " has " +
                                  std::to_string(graphs[i].graph.num_nodes) + " nodes, more than the node budget");
    }
    if (graphs[i].graph.num_edge_types != config.edge_types) {
      throw std::invalid_argument("train: graph " + std::to_string(i) + " edge-type count differs from the model");
    }
  }

  TrainResult result;
  result.state = resume ? std::move(*resume) : TrainState::fresh(config, options.seed);
  TrainState& state = result.state;
  std::mt19937_64 shuffle_rng(splitmix64(options.seed ^ 0x5eedULL));

  std::vector<std::size_t> order(graphs.size());
  std::vector<Supergraph> epoch;
  std::size_t cursor = 0;
  auto refill = [&] {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_indices(order, shuffle_rng);
    std::vector<const Graph*> ptrs;
    ptrs.reserve(order.size());
    for (std::size_t i : order) ptrs.push_back(&graphs[i].graph);
    epoch = pack_supergraphs(ptrs, options.node_budget, config.block_size, order);
    cursor = 0;
    ++result.epochs_started;
  };

  const std::int64_t end_step = state.step + options.steps;
  while (state.step < end_step) {
    if (cursor >= epoch.size()) refill();
    const auto start = std::chrono::steady_clock::now();

    std::vector<PreparedBatch> replicas;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(options.replicas), epoch.size() - cursor);
    for (std::size_t r = 0; r < take; ++r) {
      replicas.push_back(prepare_batch(std::move(epoch[cursor + r]), Backend::Banded));
      result.dropped_edges += replicas.back().coverage.actually_dropped;
      result.total_edges += static_cast<std::int64_t>(replicas.back().graph.edges.size());
    }
    cursor += take;

    const std::uint64_t step_seed = splitmix64(options.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(state.step));
    ReplicaGradient g = parallel_grad(replicas, state.params, config, step_seed, options.threads);
    if (!std::isfinite(g.loss)) throw NumericalError("non-finite loss at step " + std::to_string(state.step));
    const double norm = global_norm(g.grad);
    const double lr = lr_schedule(state.step, cfg);
    sgd_step(state, g.grad, cfg);
    result.graphs_seen += static_cast<std::int64_t>(g.num_graphs);

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::int64_t step = state.step;
    std::optional<double> accuracy;
    const bool last = step == end_step;
    if (eval_hook && ((options.eval_every > 0 && step % options.eval_every == 0) || last)) {
      accuracy = eval_hook(step, state.params);
    }
    if (accuracy || last || (options.log_every > 0 && step % options.log_every == 0)) {
      MetricsLog::Row row;
      row.step = step;
      row.loss = g.loss;
      row.lr = lr;
      row.grad_norm = norm;
      if (!options.deterministic && seconds > 0) row.graphs_per_sec = static_cast<double>(g.num_graphs) / seconds;
      row.eval_accuracy = accuracy;
      result.metrics.push_back(row);
      if (log) log->emit(row);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

double accuracy_from_logits(const std::vector<std::vector<double>>& logits, const std::vector<std::int32_t>& labels) {
  if (logits.size() != labels.size()) throw std::invalid_argument("accuracy: logits/labels length mismatch");
  if (logits.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t g = 0; g < logits.size(); ++g) {
    const auto best = std::max_element(logits[g].begin(), logits[g].end()) - logits[g].begin();
    if (best == labels[g]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.size());
}

std::vector<std::vector<double>> predict_logits(const std::vector<Graph>& graphs, const ModelParams& params,
                                                const ModelConfig& config, Backend backend) {
  std::vector<std::vector<double>> logits(graphs.size());
  if (graphs.empty()) return logits;
  const std::int32_t block = backend == Backend::Banded ? config.block_size : 1;
  std::int32_t largest = 1;
  for (const auto& g : graphs) largest = std::max(largest, g.num_nodes);
  const std::int32_t budget = (std::max(largest, 1024) + block - 1) / block * block;

  std::vector<const Graph*> ptrs;
  for (const auto& g : graphs) ptrs.push_back(&g);
  ModelConfig eval_config = config;
  eval_config.dropout_keep_prob = 1.0;
  for (auto& sg : pack_supergraphs(ptrs, budget, block)) {
    PreparedBatch batch = prepare_batch(std::move(sg), backend);
    const auto e = encode(batch, params, eval_config);
    auto rows = readout_logits(e, batch.graph, params);
    for (std::size_t m = 0; m < rows.size(); ++m) logits[batch.graph.members[m].id] = std::move(rows[m]);
  }
  return logits;
}

namespace {

std::vector<std::int32_t> labels_of(const std::vector<Graph>& graphs) {
  std::vector<std::int32_t> labels;
  for (const auto& g : graphs) labels.push_back(g.label);
  return labels;
}

}  // namespace

double evaluate(const std::vector<Graph>& graphs, const ModelParams& params, const ModelConfig& config) {
  return accuracy_from_logits(predict_logits(graphs, params, config, Backend::Sparse), labels_of(graphs));
}

double evaluate(const std::vector<CompiledGraph>& graphs, const ModelParams& params, const ModelConfig& config) {
  std::vector<Graph> plain;
  plain.reserve(graphs.size());
  for (const auto& g : graphs) plain.push_back(g.graph);
  return evaluate(plain, params, config);
}

double evaluate_banded(const std::vector<Graph>& graphs, const ModelParams& params, const ModelConfig& config) {
  return accuracy_from_logits(predict_logits(graphs, params, config, Backend::Banded), labels_of(graphs));
}

}  // namespace bandgnn
