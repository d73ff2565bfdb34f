// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoints: "BGNN", u32 version, then records of
// (u32 name length, name, u32 rank, u32 dims[rank], f64 payload), all
// little-endian, until end of file.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "bandgnn/trainer.hpp"

namespace bandgnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Named arrays; lookup is by name, file order is irrelevant.
using TensorMap = std::map<std::string, DenseArray<double>>;

void write_tensors(std::ostream& os, const TensorMap& tensors);
TensorMap read_tensors(std::istream& is);

/// Params under their own names, velocity under "velocity/<name>",
/// scalars "meta/step", "meta/rng_seed", "meta/steps" (T),
/// "meta/block_size".
void save_checkpoint(const std::string& path, const TrainState& state, const ModelConfig& config);

struct LoadedCheckpoint {
  TrainState state;
  ModelConfig config;  // hidden, edge_types, num_features from shapes; steps/block_size from meta
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Throws std::invalid_argument("checkpoint shape mismatch ...") when the
/// checkpoint does not fit `expected`.
void check_compatible(const LoadedCheckpoint& checkpoint, const ModelConfig& expected);

}  // namespace bandgnn
