// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bandgnn {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

bool get_u32(std::istream& is, std::uint32_t& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return static_cast<bool>(is);
}

std::uint32_t need_u32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  if (!get_u32(is, v)) throw std::runtime_error(std::string("truncated checkpoint reading ") + what);
  return v;
}

DenseArray<double> scalar(double v) { return DenseArray<double>(Shape{}, std::vector<double>{v}); }

}  // namespace

void write_tensors(std::ostream& os, const TensorMap& tensors) {
  os.write("BGNN", 4);
  put_u32(os, kCheckpointVersion);
  for (const auto& [name, t] : tensors) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed to write checkpoint");
}

TensorMap read_tensors(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BGNN", 4) != 0) throw std::runtime_error("not a checkpoint (bad magic)");
  const std::uint32_t version = need_u32(is, "version");
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  TensorMap tensors;
  std::uint32_t name_len = 0;
  while (get_u32(is, name_len)) {
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("truncated checkpoint reading a record name");
    const std::uint32_t rank = need_u32(is, "rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(need_u32(is, "dims"));
    std::vector<double> values(shape_size(shape));
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated checkpoint payload for " + name);
    tensors.insert_or_assign(name, DenseArray<double>(std::move(shape), std::move(values)));
  }
  return tensors;
}

void save_checkpoint(const std::string& path, const TrainState& state, const ModelConfig& config) {
  TensorMap tensors;
  state.params.for_each([&](std::string_view name, const DenseArray<double>& a) { tensors.emplace(std::string(name), a); });
  state.velocity.for_each(
      [&](std::string_view name, const DenseArray<double>& a) { tensors.emplace("velocity/" + std::string(name), a); });
  tensors.emplace("meta/step", scalar(static_cast<double>(state.step)));
  tensors.emplace("meta/rng_seed", scalar(std::bit_cast<double>(state.rng_seed)));
  tensors.emplace("meta/steps", scalar(config.steps));
  tensors.emplace("meta/block_size", scalar(config.block_size));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_tensors(os, tensors);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  TensorMap tensors = read_tensors(is);
  auto take = [&](const std::string& name) -> DenseArray<double> {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("checkpoint is missing record " + name);
    return std::move(it->second);
  };
  auto meta = [&](const std::string& name, double fallback) {
    auto it = tensors.find(name);
    return it == tensors.end() ? fallback : it->second[0];
  };

  LoadedCheckpoint out;
  out.state.params.for_each([&](std::string_view name, DenseArray<double>& a) { a = take(std::string(name)); });
  const bool has_velocity = tensors.count("velocity/edge_weights") > 0;
  out.state.velocity.for_each([&](std::string_view name, DenseArray<double>& a) {
    a = has_velocity ? take("velocity/" + std::string(name)) : DenseArray<double>();
  });

  const auto& p = out.state.params;
  if (p.readout_w.rank() != 1 || p.edge_bias.rank() != 2 || p.embed_table.rank() != 2) {
    throw std::runtime_error("checkpoint records have unexpected ranks");
  }
  out.config.hidden = static_cast<std::int32_t>(p.readout_w.dim(0));
  out.config.edge_types = static_cast<std::int32_t>(p.edge_bias.dim(0));
  out.config.num_features = static_cast<std::int32_t>(p.embed_table.dim(0));
  out.config.steps = static_cast<std::int32_t>(meta("meta/steps", 8));
  out.config.block_size = static_cast<std::int32_t>(meta("meta/block_size", 16));
  out.config.validate();
  const ModelParams reference = ModelParams::zeros(out.config);
  if (!reference.same_shape(out.state.params)) throw std::runtime_error("checkpoint shape mismatch: inconsistent record shapes");
  if (!has_velocity) out.state.velocity = ModelParams::zeros(out.config);
  if (!reference.same_shape(out.state.velocity)) throw std::runtime_error("checkpoint shape mismatch: velocity shapes");
  out.state.step = static_cast<std::int64_t>(meta("meta/step", 0));
  out.state.rng_seed = std::bit_cast<std::uint64_t>(meta("meta/rng_seed", 0.0));
  return out;
}

void check_compatible(const LoadedCheckpoint& ckpt, const ModelConfig& expected) {
  const ModelConfig& c = ckpt.config;
  if (c.hidden != expected.hidden || c.edge_types != expected.edge_types || c.num_features != expected.num_features) {
    throw std::invalid_argument("checkpoint shape mismatch: checkpoint has H=" + std::to_string(c.hidden) +
                                " P=" + std::to_string(c.edge_types) + " V=" + std::to_string(c.num_features) +
                                ", config expects H=" + std::to_string(expected.hidden) + " P=" +
                                std::to_string(expected.edge_types) + " V=" + std::to_string(expected.num_features));
  }
}

}  // namespace bandgnn
