// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "bandgnn/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace bandgnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(int line, const std::string& msg) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(line, "malformed number '" + v + "'");
    return d;
  } catch (const std::logic_error&) {
    bad(line, "malformed number '" + v + "'");
  }
}

std::int64_t to_int(const std::string& v, int line) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(line, "malformed integer '" + v + "'");
  return out;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "True" || v == "1") return true;
  if (v == "false" || v == "False" || v == "0") return false;
  bad(line, "malformed boolean '" + v + "'");
}

}  // namespace

RunConfig parse_config(std::istream& is, RunConfig cfg) {
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) bad(line, "expected key=value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (value.empty()) bad(line, "missing value for " + key);

    auto& o = cfg.optimizer;
    auto& m = cfg.model;
    auto& t = cfg.train;
    if (key == "learning_rate") o.learning_rate = to_double(value, line);
    else if (key == "momentum") o.momentum = to_double(value, line);
    else if (key == "use_nesterov") o.use_nesterov = to_bool(value, line);
    else if (key == "gradient_clip") o.gradient_clip = to_double(value, line);
    else if (key == "weight_decay") o.weight_decay = to_double(value, line);
    else if (key == "lr_decay_steps" || key == "learning_rate_decay_steps") o.lr_decay_steps = to_int(value, line);
    else if (key == "end_lr_factor" || key == "end_learning_rate_factor") o.end_lr_factor = to_double(value, line);
    else if (key == "label_smoothing") o.label_smoothing = to_double(value, line);
    else if (key == "dropout_keep_prob") o.dropout_keep_prob = to_double(value, line);
    else if (key == "H" || key == "hidden") m.hidden = static_cast<std::int32_t>(to_int(value, line));
    else if (key == "T" || key == "steps_per_graph" || key == "propagation_steps") m.steps = static_cast<std::int32_t>(to_int(value, line));
    else if (key == "P" || key == "edge_types") m.edge_types = static_cast<std::int32_t>(to_int(value, line));
    else if (key == "S" || key == "block_size") m.block_size = static_cast<std::int32_t>(to_int(value, line));
    else if (key == "num_features") m.num_features = static_cast<std::int32_t>(to_int(value, line));
    else if (key == "steps") t.steps = to_int(value, line);
    else if (key == "replicas") t.replicas = static_cast<std::int32_t>(to_int(value, line));
    else if (key == "node_budget") t.node_budget = static_cast<std::int32_t>(to_int(value, line));
    else if (key == "seed") t.seed = static_cast<std::uint64_t>(to_int(value, line));
    else if (key == "threads") t.threads = static_cast<int>(to_int(value, line));
    else if (key == "eval_every") t.eval_every = to_int(value, line);
    else bad(line, "unknown key '" + key + "'");
  }
  cfg.optimizer.validate();
  cfg.model.validate();
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config " + path);
  return parse_config(is, std::move(base));
}

void write_config(std::ostream& os, const RunConfig& c) {
  os << std::setprecision(17) << std::boolalpha;
  os << "learning_rate = " << c.optimizer.learning_rate << '\n'
     << "momentum = " << c.optimizer.momentum << '\n'
     << "use_nesterov = " << c.optimizer.use_nesterov << '\n'
     << "gradient_clip = " << c.optimizer.gradient_clip << '\n'
     << "weight_decay = " << c.optimizer.weight_decay << '\n'
     << "lr_decay_steps = " << c.optimizer.lr_decay_steps << '\n'
     << "end_lr_factor = " << c.optimizer.end_lr_factor << '\n'
     << "label_smoothing = " << c.optimizer.label_smoothing << '\n'
     << "dropout_keep_prob = " << c.optimizer.dropout_keep_prob << '\n'
     << "H = " << c.model.hidden << '\n'
     << "T = " << c.model.steps << '\n'
     << "P = " << c.model.edge_types << '\n'
     << "S = " << c.model.block_size << '\n'
     << "num_features = " << c.model.num_features << '\n'
     << "steps = " << c.train.steps << '\n'
     << "replicas = " << c.train.replicas << '\n'
     << "node_budget = " << c.train.node_budget << '\n'
     << "seed = " << c.train.seed << '\n'
     << "threads = " << c.train.threads << '\n'
     << "eval_every = " << c.train.eval_every << '\n';
}

SweepSpace SweepSpace::many_replicas() {
  SweepSpace s;
  s.learning_rate = {1.0, 3.0, 7.0, 10.0, 30.0};
  s.lr_decay_steps = {500, 1000, 5000, 10000};
  return s;
}

std::vector<RunConfig> sample_configs(const RunConfig& base, const SweepSpace& space, std::int32_t count,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](const auto& values) {
    if (values.empty()) throw std::invalid_argument("sweep space has an empty value set");
    return values[static_cast<std::size_t>(rng() % values.size())];
  };
  std::vector<RunConfig> out;
  for (std::int32_t i = 0; i < count; ++i) {
    RunConfig c = base;
    c.optimizer.dropout_keep_prob = pick(space.dropout_keep_prob);
    c.optimizer.label_smoothing = pick(space.label_smoothing);
    c.optimizer.weight_decay = pick(space.weight_decay);
    c.optimizer.learning_rate = pick(space.learning_rate);
    c.optimizer.lr_decay_steps = pick(space.lr_decay_steps);
    c.optimizer.end_lr_factor = pick(space.end_lr_factor);
    c.optimizer.momentum = pick(space.momentum);
    c.optimizer.use_nesterov = pick(space.use_nesterov);
    c.optimizer.gradient_clip = pick(space.gradient_clip);
    c.train.seed = base.train.seed + static_cast<std::uint64_t>(i);
    out.push_back(c);
  }
  return out;
}

}  // namespace bandgnn
