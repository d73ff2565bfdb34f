// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// key=value run configuration files and the hyperparameter sampler.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bandgnn/model.hpp"
#include "bandgnn/trainer.hpp"

namespace bandgnn {

struct RunConfig {
  OptimizerConfig optimizer;
  ModelConfig model;
  TrainOptions train;
};

/// Parses `key = value` lines; '#' starts a comment. Keys are the field
/// names of OptimizerConfig (learning_rate, momentum, use_nesterov,
/// gradient_clip, weight_decay, lr_decay_steps, end_lr_factor,
/// label_smoothing, dropout_keep_prob), ModelConfig (H, T, P, S,
/// num_features) and the run fields steps, replicas, node_budget, seed,
/// threads, eval_every. Unknown keys and malformed values throw
/// std::invalid_argument with the line number.
RunConfig parse_config(std::istream& is, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
void write_config(std::ostream& os, const RunConfig& config);

/// Value sets for random hyperparameter search.
struct SweepSpace {
  std::vector<double> dropout_keep_prob{0.6, 0.7, 0.8, 0.9};
  std::vector<double> label_smoothing{0, 0.005, 0.05};
  std::vector<double> weight_decay{1e-1, 1e-6, 1e-5, 1e-4, 1e-3};
  std::vector<double> learning_rate{0.03, 0.1, 0.3, 1.0, 3.0};
  std::vector<std::int64_t> lr_decay_steps{100000, 300000};
  std::vector<double> end_lr_factor{0.1, 1.0};
  std::vector<double> momentum{0.3, 0.5, 0.7, 0.9, 0.95, 0.97};
  std::vector<bool> use_nesterov{false, true};
  std::vector<double> gradient_clip{0.003, 0.01, 0.1, 0.3};

  /// Larger learning rates and shorter decay for many-replica runs.
  static SweepSpace many_replicas();
};

/// Independent uniform draws from `space` applied on top of `base`.
std::vector<RunConfig> sample_configs(const RunConfig& base, const SweepSpace& space, std::int32_t count,
                                      std::uint64_t seed);

}  // namespace bandgnn
