// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Gated graph neural network over supergraphs: initial embeddings, the
// T-step encoder on any propagation backend, candidate readout, smoothed
// cross-entropy and its hand-derived reverse-mode gradient.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bandgnn/dense_array.hpp"
#include "bandgnn/kernels.hpp"
#include "bandgnn/packer.hpp"
#include "bandgnn/reference.hpp"

namespace bandgnn {

struct ModelConfig {
  std::int32_t hidden = 32;       // H
  std::int32_t steps = 8;         // T
  std::int32_t edge_types = 2;    // P
  std::int32_t block_size = 16;   // S
  std::int32_t num_features = 4;  // rows of the feature embedding table
  double label_smoothing = 0.0;
  double dropout_keep_prob = 1.0;
  double weight_decay = 0.0;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

/// Column H-2 of the initial embedding marks the hole, column H-1 marks
/// candidates; the feature table fills the first H-2 columns.
struct ModelParams {
  DenseArray<double> embed_table;   // [V, H-2]
  DenseArray<double> edge_weights;  // [P*H, H], rows p*H..p*H+H-1 hold W_p
  DenseArray<double> edge_bias;     // [P, H]
  GruParams<double> gru;
  DenseArray<double> readout_w;     // [H]
  DenseArray<double> readout_b;     // scalar

  static ModelParams zeros(const ModelConfig& config);
  /// Matrices uniform in +-1/sqrt(H), biases zero.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  std::int32_t hidden() const { return static_cast<std::int32_t>(readout_w.size()); }
  std::int32_t edge_types() const { return static_cast<std::int32_t>(edge_bias.dim(0)); }
  std::int32_t num_features() const { return static_cast<std::int32_t>(embed_table.dim(0)); }

  template <typename F>
  void for_each(F&& f) {
    f("embed_table", embed_table);
    f("edge_weights", edge_weights);
    f("edge_bias", edge_bias);
    f("gru.w_r", gru.w_r);
    f("gru.w_z", gru.w_z);
    f("gru.w_h", gru.w_h);
    f("gru.u_r", gru.u_r);
    f("gru.u_z", gru.u_z);
    f("gru.u_h", gru.u_h);
    f("gru.b_r", gru.b_r);
    f("gru.b_z", gru.b_z);
    f("gru.b_h", gru.b_h);
    f("readout.w", readout_w);
    f("readout.b", readout_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each([&](std::string_view name, DenseArray<double>& a) {
      f(name, static_cast<const DenseArray<double>&>(a));
    });
  }

  std::size_t num_scalars() const;
  double squared_norm() const;
  bool all_finite() const;
  /// this += scale * other
  void add_scaled(const ModelParams& other, double scale);
  void scale(double factor);
  bool same_shape(const ModelParams& other) const;
};

enum class Backend { Banded, Sparse, Dense };
std::string_view backend_name(Backend backend);
Backend parse_backend(std::string_view name);

/// A supergraph with the adjacency representation its backend needs.
struct PreparedBatch {
  Supergraph graph;
  Backend backend = Backend::Banded;
  BandedBlocks<double> banded;
  CoverageReport coverage;
  reference::SparseAdjacency sparse;
  DenseArray<double> dense;

  std::size_t num_graphs() const { return graph.members.size(); }
};

PreparedBatch prepare_batch(Supergraph graph, Backend backend);

/// Inverted dropout on the GRU output of every step, fresh mask per step.
struct DropoutSpec {
  double keep_prob = 1.0;
  std::uint64_t seed = 0;
  bool active() const { return keep_prob < 1.0; }
};

/// E0 as [N, H]. Throws on feature ids outside the table.
DenseArray<double> init_embeddings(const Supergraph& graph, const ModelParams& params);

/// Runs config.steps propagation steps from `initial` ([N, H]) and returns
/// the final embeddings as [N, H].
DenseArray<double> encode(const PreparedBatch& batch, const DenseArray<double>& initial, const ModelParams& params,
                          const ModelConfig& config, const DropoutSpec& dropout = {});
DenseArray<double> encode(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config,
                          const DropoutSpec& dropout = {});

/// Per member: <w, e_c> + b for each candidate, in candidate order.
std::vector<std::vector<double>> readout_logits(const DenseArray<double>& final_embeddings, const Supergraph& graph,
                                                const ModelParams& params);

/// -sum_c t_c log softmax(logits)_c with t = (1-eps) onehot(label) + eps/|C|.
double smoothed_cross_entropy(const std::vector<double>& logits, std::int32_t label, double smoothing);

struct LossAndGrad {
  double loss = 0;  // mean member loss + weight_decay/2 |params|^2
  ModelParams grad;
  std::size_t num_graphs = 0;
};

/// Banded forward and reverse pass over one supergraph. Dropout follows
/// config.dropout_keep_prob when `training` is set.
LossAndGrad loss_and_grad(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config,
                          std::uint64_t rng_seed, bool training = true);

/// Forward-only loss on any backend.
double loss_value(const PreparedBatch& batch, const ModelParams& params, const ModelConfig& config,
                  std::uint64_t rng_seed, bool training = true);

/// Deterministic keep-mask stream shared by every backend.
std::vector<std::vector<char>> dropout_masks(std::size_t steps, std::size_t count, const DropoutSpec& spec);

}  // namespace bandgnn
