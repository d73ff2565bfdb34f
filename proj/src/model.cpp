// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace bandgnn {

void ModelConfig::validate() const {
  if (hidden < 2) throw std::invalid_argument("hidden must be at least 2 (two indicator columns)");
  if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
  if (edge_types <= 0) throw std::invalid_argument("edge_types must be positive");
  if (block_size <= 0) throw std::invalid_argument("block_size must be positive");
  if (num_features <= 0) throw std::invalid_argument("num_features must be positive");
  if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) throw std::invalid_argument("label_smoothing must be in [0, 0.5)");
  if (!(dropout_keep_prob > 0.0 && dropout_keep_prob <= 1.0)) throw std::invalid_argument("dropout_keep_prob must be in (0, 1]");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be nonnegative");
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  const auto H = static_cast<std::size_t>(config.hidden);
  const auto P = static_cast<std::size_t>(config.edge_types);
  ModelParams p;
  p.embed_table = DenseArray<double>({static_cast<std::size_t>(config.num_features), H - 2});
  p.edge_weights = DenseArray<double>({P * H, H});
  p.edge_bias = DenseArray<double>({P, H});
  p.gru = GruParams<double>::zeros(H);
  p.readout_w = DenseArray<double>({H});
  p.readout_b = DenseArray<double>(Shape{});
  return p;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zeros(config);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (auto* m : {&p.embed_table, &p.edge_weights, &p.gru.w_r, &p.gru.w_z, &p.gru.w_h, &p.gru.u_r, &p.gru.u_z,
                  &p.gru.u_h, &p.readout_w}) {
    for (auto& v : m->values()) v = uniform(rng);
  }
  return p;
}

std::size_t ModelParams::num_scalars() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const DenseArray<double>& a) { n += a.size(); });
  return n;
}

double ModelParams::squared_norm() const {
  double s = 0;
  for_each([&](std::string_view, const DenseArray<double>& a) {
    for (double v : a.values()) s += v * v;
  });
  return s;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](std::string_view, const DenseArray<double>& a) {
    for (double v : a.values()) ok = ok && std::isfinite(v);
  });
  return ok;
}

namespace {

template <typename F>
void zip_params(ModelParams& a, const ModelParams& b, F&& f) {
  std::vector<const DenseArray<double>*> rhs;
  b.for_each([&](std::string_view, const DenseArray<double>& x) { rhs.push_back(&x); });
  std::size_t i = 0;
  a.for_each([&](std::string_view name, DenseArray<double>& x) {
    const DenseArray<double>& y = *rhs[i++];
    if (x.shape() != y.shape()) throw std::invalid_argument("parameter shape mismatch in " + std::string(name));
    f(x, y);
  });
}

}  // namespace

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  zip_params(*this, other, [&](DenseArray<double>& x, const DenseArray<double>& y) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += scale * y[k];
  });
}

void ModelParams::scale(double factor) {
  for_each([&](std::string_view, DenseArray<double>& a) {
    for (auto& v : a.values()) v *= factor;
  });
}

bool ModelParams::same_shape(const ModelParams& other) const {
  std::vector<Shape> shapes;
  for_each([&](std::string_view, const DenseArray<double>& a) { shapes.push_back(a.shape()); });
  std::size_t i = 0;
  bool same = true;
  other.for_each([&](std::string_view, const DenseArray<double>& a) { same = same && i < shapes.size() && shapes[i++] == a.shape(); });
  return same && i == shapes.size();
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Banded: return "banded";
    case Backend::Sparse: return "sparse";
    case Backend::Dense: return "dense";
  }
  return "banded";
}

Backend parse_backend(std::string_view name) {
  if (name == "banded") return Backend::Banded;
  if (name == "sparse") return Backend::Sparse;
  if (name == "dense") return Backend::Dense;
  throw std::invalid_argument("unknown backend '" + std::string(name) + "'");
}

PreparedBatch prepare_batch(Supergraph graph, Backend backend) {
  PreparedBatch b;
  b.backend = backend;
  switch (backend) {
    case Backend::Banded: {
      auto extraction = extract_banded<double>(graph, graph.block_size);
      b.banded = std::move(extraction.blocks);
      b.coverage = extraction.coverage;
      break;
    }
    case Backend::Sparse:
      b.sparse = reference::SparseAdjacency::from_edges(graph.num_nodes, graph.num_edge_types, graph.edges);
      break;
    case Backend::Dense:
      b.dense = reference::dense_adjacency(graph.num_nodes, graph.num_edge_types, graph.edges);
      break;
  }
  b.graph = std::move(graph);
  return b;
}

DenseArray<double> init_embeddings(const Supergraph& sg, const ModelParams& params) {
  const auto H = static_cast<std::size_t>(params.hidden());
  const std::size_t width = H - 2;
  const auto N = static_cast<std::size_t>(sg.num_nodes);
  DenseArray<double> e({N, H});
  for (std::size_t n = 0; n < N; ++n) {
    const std::int32_t f = sg.node_features.empty() ? 0 : sg.node_features[n];
    if (f < 0 || f >= params.num_features()) {
      throw std::invalid_argument("feature id " + std::to_string(f) + " of node " + std::to_string(n) +
                                  " is outside the embedding table");
    }
    std::copy_n(params.embed_table.data() + static_cast<std::size_t>(f) * width, width, e.data() + n * H);
  }
  for (const auto& m : sg.members) {
    e[static_cast<std::size_t>(m.hole) * H + H - 2] = 1.0;
    for (NodeId c : m.candidates) e[static_cast<std::size_t>(c) * H + H - 1] = 1.0;
  }
  return e;
}

std::vector<std::vector<char>> dropout_masks(std::size_t steps, std::size_t count, const DropoutSpec& spec) {
  std::vector<std::vector<char>> masks;
  if (!spec.active()) return masks;
  std::mt19937_64 rng(spec.seed);
  masks.resize(steps);
  for (auto& mask : masks) {
    mask.resize(count);
    for (auto& keep : mask) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      keep = u < spec.keep_prob ? 1 : 0;
    }
  }
  return masks;
}

namespace {

void apply_mask(DenseArray<double>& e, const std::vector<char>& mask, double keep_prob) {
  const double scale = 1.0 / keep_prob;
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = mask[i] ? e[i] * scale : 0.0;
}

void check_params(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config) {
  if (params.hidden() != config.hidden || params.edge_types() != config.edge_types ||
      params.num_features() != config.num_features) {
    throw std::invalid_argument("model parameters do not match the model config");
  }
  if (batch.graph.num_edge_types > config.edge_types) {
    throw std::invalid_argument("supergraph has more edge types than the model");
  }
}

}  // namespace

DenseArray<double> encode(const PreparedBatch& batch, const DenseArray<double>& initial, const ModelParams& params,
                          const ModelConfig& config, const DropoutSpec& dropout) {
  check_params(batch, params, config);
  const auto N = static_cast<std::size_t>(batch.graph.num_nodes);
  const auto H = static_cast<std::size_t>(config.hidden);
  const auto P = static_cast<std::size_t>(batch.graph.num_edge_types);
  if (initial.shape() != Shape{N, H}) throw std::invalid_argument("encode: initial embeddings must be [N, H]");
  if (P != static_cast<std::size_t>(config.edge_types)) throw std::invalid_argument("encode: edge-type count mismatch");
  const auto steps = static_cast<std::size_t>(config.steps);
  const auto masks = dropout_masks(steps, N * H, dropout);

  DenseArray<double> e = initial;
  if (batch.backend == Backend::Banded) {
    const auto K = static_cast<std::size_t>(batch.banded.num_blocks);
    const auto S = static_cast<std::size_t>(batch.banded.block_size);
    e = std::move(e).reshaped({K, S, H});
  }
  for (std::size_t t = 0; t < steps; ++t) {
    switch (batch.backend) {
      case Backend::Banded:
        e = propagation_step(batch.banded, e, params.edge_weights, params.edge_bias, params.gru);
        break;
      case Backend::Sparse:
        e = reference::sparse_step(batch.sparse, e, params.edge_weights, params.edge_bias, params.gru);
        break;
      case Backend::Dense:
        e = reference::dense_step(batch.dense, e, params.edge_weights, params.edge_bias, params.gru);
        break;
    }
    if (dropout.active()) apply_mask(e, masks[t], dropout.keep_prob);
  }
  return std::move(e).reshaped({N, H});
}

DenseArray<double> encode(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config,
                          const DropoutSpec& dropout) {
  return encode(batch, init_embeddings(batch.graph, params), params, config, dropout);
}

std::vector<std::vector<double>> readout_logits(const DenseArray<double>& e, const Supergraph& sg,
                                                const ModelParams& params) {
  const auto H = static_cast<std::size_t>(params.hidden());
  if (e.size() != static_cast<std::size_t>(sg.num_nodes) * H) throw std::invalid_argument("readout: embedding size mismatch");
  std::vector<std::vector<double>> logits;
  logits.reserve(sg.members.size());
  for (const auto& m : sg.members) {
    std::vector<double>& row = logits.emplace_back();
    for (NodeId c : m.candidates) {
      double acc = params.readout_b[0];
      const double* ec = e.data() + static_cast<std::size_t>(c) * H;
      for (std::size_t h = 0; h < H; ++h) acc += params.readout_w[h] * ec[h];
      row.push_back(acc);
    }
  }
  return logits;
}

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
  for (auto& v : p) v /= z;
  return p;
}

double smoothed_target(std::size_t c, std::int32_t label, std::size_t count, double eps) {
  return (c == static_cast<std::size_t>(label) ? 1.0 - eps : 0.0) + eps / static_cast<double>(count);
}

}  // namespace

double smoothed_cross_entropy(const std::vector<double>& logits, std::int32_t label, double eps) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (double l : logits) z += std::exp(l - mx);
  const double log_z = mx + std::log(z);
  double loss = 0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const double t = smoothed_target(c, label, logits.size(), eps);
    if (t != 0.0) loss -= t * (logits[c] - log_z);
  }
  return loss;
}

double loss_value(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config,
                  std::uint64_t rng_seed, bool training) {
  const DropoutSpec dropout{training ? config.dropout_keep_prob : 1.0, rng_seed};
  const auto e = encode(batch, params, config, dropout);
  const auto logits = readout_logits(e, batch.graph, params);
  double loss = 0;
  for (std::size_t g = 0; g < logits.size(); ++g) {
    loss += smoothed_cross_entropy(logits[g], batch.graph.members[g].label, config.label_smoothing);
  }
  if (!logits.empty()) loss /= static_cast<double>(logits.size());
  return loss + 0.5 * config.weight_decay * params.squared_norm();
}

LossAndGrad loss_and_grad(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config,
                          std::uint64_t rng_seed, bool training) {
  if (batch.backend != Backend::Banded) throw std::invalid_argument("loss_and_grad requires a banded batch");
  check_params(batch, params, config);
  const Supergraph& sg = batch.graph;
  const BandedBlocks<double>& blocks = batch.banded;
  const auto K = static_cast<std::size_t>(blocks.num_blocks);
  const auto S = static_cast<std::size_t>(blocks.block_size);
  const auto P = static_cast<std::size_t>(blocks.num_edge_types);
  const auto N = K * S;
  const auto H = static_cast<std::size_t>(config.hidden);
  const auto T = static_cast<std::size_t>(config.steps);
  if (P != static_cast<std::size_t>(config.edge_types)) throw std::invalid_argument("loss_and_grad: edge-type count mismatch");

  const DropoutSpec dropout{training ? config.dropout_keep_prob : 1.0, rng_seed};
  const auto masks = dropout_masks(T, N * H, dropout);

  // Forward, keeping every intermediate of the unrolled computation.
  std::vector<DenseArray<double>> states;     // E_t as [K, S, H], t = 0..T
  std::vector<DenseArray<double>> pre_flat;   // [K, S, P*H]
  std::vector<DenseArray<double>> incoming;   // [K, S, H]
  std::vector<GruCache<double>> caches(T);
  states.reserve(T + 1);
  states.push_back(init_embeddings(sg, params).reshaped({K, S, H}));
  for (std::size_t t = 0; t < T; ++t) {
    pre_flat.push_back(aggregate_banded(blocks, states[t]).reshaped({K, S, P * H}));
    incoming.push_back(incoming_messages(pre_flat[t], params.edge_weights, params.edge_bias, blocks.in_degree));
    DenseArray<double> next = gru_cell(incoming[t], states[t], params.gru, &caches[t]);
    if (dropout.active()) apply_mask(next, masks[t], dropout.keep_prob);
    states.push_back(std::move(next));
  }

  LossAndGrad out;
  out.grad = ModelParams::zeros(config);
  out.num_graphs = sg.members.size();
  ModelParams& grad = out.grad;

  // Readout and loss.
  const DenseArray<double>& final_e = states[T];
  DenseArray<double> d_state({K, S, H});
  const double inv_graphs = sg.members.empty() ? 0.0 : 1.0 / static_cast<double>(sg.members.size());
  double loss = 0;
  for (const auto& m : sg.members) {
    std::vector<double> logits;
    for (NodeId c : m.candidates) {
      double acc = params.readout_b[0];
      const double* ec = final_e.data() + static_cast<std::size_t>(c) * H;
      for (std::size_t h = 0; h < H; ++h) acc += params.readout_w[h] * ec[h];
      logits.push_back(acc);
    }
    loss += smoothed_cross_entropy(logits, m.label, config.label_smoothing) * inv_graphs;
    const auto prob = softmax(logits);
    for (std::size_t i = 0; i < m.candidates.size(); ++i) {
      const double d_logit =
          (prob[i] - smoothed_target(i, m.label, m.candidates.size(), config.label_smoothing)) * inv_graphs;
      const auto c = static_cast<std::size_t>(m.candidates[i]);
      const double* ec = final_e.data() + c * H;
      double* dc = d_state.data() + c * H;
      for (std::size_t h = 0; h < H; ++h) {
        grad.readout_w[h] += d_logit * ec[h];
        dc[h] += d_logit * params.readout_w[h];
      }
      grad.readout_b[0] += d_logit;
    }
  }

  // Reverse through the unrolled steps.
  for (std::size_t t = T; t-- > 0;) {
    if (dropout.active()) apply_mask(d_state, masks[t], dropout.keep_prob);
    auto [d_incoming, d_prev] = gru_cell_backward(d_state, incoming[t], states[t], params.gru, caches[t], grad.gru);

    const MatrixBatch<const double> pre_rows{pre_flat[t].data(), 1, N, P * H};
    const MatrixBatch<const double> d_inc_rows{d_incoming.data(), 1, N, H};
    bmm_tn_accumulate(batch_view(grad.edge_weights), pre_rows, d_inc_rows);
    bmm_tn_accumulate(batch_view(grad.edge_bias), batch_view(blocks.in_degree), d_inc_rows);

    DenseArray<double> d_pre({N, P * H});
    bmm_nt_accumulate(batch_view(d_pre), d_inc_rows, batch_view(static_cast<const DenseArray<double>&>(params.edge_weights)));
    DenseArray<double> d_through = aggregate_banded_backward(blocks, std::move(d_pre).reshaped({K, S * P, H}));
    for (std::size_t i = 0; i < d_prev.size(); ++i) d_prev[i] += d_through[i];
    d_state = std::move(d_prev);
  }

  // Initial embeddings: feature table columns only; indicators are constant.
  const std::size_t width = H - 2;
  for (std::size_t n = 0; n < N; ++n) {
    const auto f = static_cast<std::size_t>(sg.node_features.empty() ? 0 : sg.node_features[n]);
    double* row = grad.embed_table.data() + f * width;
    for (std::size_t h = 0; h < width; ++h) row[h] += d_state[n * H + h];
  }

  if (config.weight_decay > 0) {
    grad.add_scaled(params, config.weight_decay);
    loss += 0.5 * config.weight_decay * params.squared_norm();
  }
  out.loss = loss;
  return out;
}

}  // namespace bandgnn
