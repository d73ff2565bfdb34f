// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// bandgnn command-line interface.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "bandgnn/checkpoint.hpp"
#include "bandgnn/config.hpp"
#include "bandgnn/dataset_io.hpp"
#include "bandgnn/reference.hpp"

namespace fs = std::filesystem;
using namespace bandgnn;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open " + path);
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot write " + path);
  return os;
}

int report_errors(const std::vector<RecordError>& errors, const std::string& path) {
  for (const auto& e : errors) std::cerr << path << ":" << e.line << ": " << e.message << '\n';
  return errors.empty() ? kOk : kData;
}

std::vector<CompiledGraph> load_compiled(const std::string& path, int& status) {
  auto is = open_in(path);
  CompiledRead read = read_compiled(is);
  status = std::max(status, report_errors(read.errors, path));
  return std::move(read.graphs);
}

FilterCriterion parse_filter(const std::string& text) {
  const auto lt = text.find('<');
  if (lt == std::string::npos) throw UsageError("--filter expects bandwidth<b or order<n");
  const std::string key = text.substr(0, lt);
  std::int64_t bound = 0;
  try {
    bound = std::stoll(text.substr(lt + 1));
  } catch (const std::exception&) {
    throw UsageError("--filter bound is not an integer: " + text);
  }
  if (key == "bandwidth") return BandwidthBelow{bound};
  if (key == "order") return OrderBelow{bound};
  throw UsageError("--filter key must be bandwidth or order, got " + key);
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw UsageError("expected comma-separated integers, got '" + text + "'");
    }
  }
  return out;
}

// --- compile ---------------------------------------------------------------

struct CompileArgs {
  std::string in, out;
  std::int32_t steps = 8;
  int threads = 1;
};

int cmd_compile(const CompileArgs& a) {
  auto is = open_in(a.in);
  GraphsRead read = read_graphs(is);
  int status = report_errors(read.errors, a.in);
  const auto compiled = compile_all(read.graphs, a.steps, a.threads);
  auto os = open_out(a.out);
  write_compiled(os, compiled);

  std::int64_t before = 0, after = 0, max_before = 0, max_after = 0;
  std::vector<double> bandwidths;
  for (const auto& c : compiled) {
    before += c.original_num_nodes;
    after += c.graph.num_nodes;
    max_before = std::max<std::int64_t>(max_before, c.original_num_nodes);
    max_after = std::max<std::int64_t>(max_after, c.graph.num_nodes);
    bandwidths.push_back(c.bandwidth);
  }
  std::cout << "graphs: " << compiled.size() << " (rejected " << read.errors.size() << ")\n"
            << "nodes before reachability: " << before << " (max " << max_before << ")\n"
            << "nodes after reachability: " << after << " (max " << max_after << ")\n"
            << "bandwidth histogram\nbin_lo,bin_hi,count\n";
  const Histogram h = log_histogram(bandwidths);
  for (std::size_t i = 0; i < h.counts.size(); ++i) std::cout << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  return status;
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string in;
  std::string bounds = "128,256,512,1024";
  std::string histograms;
};

int cmd_stats(const StatsArgs& a) {
  int status = kOk;
  const auto graphs = load_compiled(a.in, status);
  if (status != kOk && graphs.empty()) {
    std::cerr << "stats needs compiled input (run `bandgnn compile` first)\n";
    return kData;
  }
  const DatasetStats s = dataset_stats(graphs, parse_int_list(a.bounds));
  write_bounds_table(std::cout, s);
  if (!a.histograms.empty()) {
    auto os = open_out(a.histograms);
    write_histograms_csv(os, s);
  } else {
    write_histograms_csv(std::cout, s);
  }
  return status;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string in, config, filter, out_dir = "run", eval_path;
  std::optional<std::int32_t> block_size, replicas, node_budget;
  std::optional<std::int64_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::int64_t> eval_every;
  bool deterministic = false;
};

RunConfig resolve_config(const std::string& path) {
  RunConfig cfg;
  if (!path.empty()) {
    try {
      cfg = load_config(path);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = resolve_config(a.config);
  if (a.block_size) cfg.model.block_size = *a.block_size;
  if (a.replicas) cfg.train.replicas = *a.replicas;
  if (a.node_budget) cfg.train.node_budget = *a.node_budget;
  if (a.steps) cfg.train.steps = *a.steps;
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.threads) cfg.train.threads = *a.threads;
  if (a.eval_every) cfg.train.eval_every = *a.eval_every;
  cfg.train.deterministic = a.deterministic;
  try {
    cfg.model.validate();
    cfg.optimizer.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  int status = kOk;
  std::vector<CompiledGraph> graphs = load_compiled(a.in, status);
  std::cout << "loaded " << graphs.size() << " graphs\n";
  if (!a.filter.empty()) {
    FilterResult f = filter_dataset(graphs, parse_filter(a.filter));
    std::cout << "filter " << a.filter << ": kept " << f.graphs.size() << ", excluded "
              << graphs.size() - f.graphs.size() << " (retained fraction " << f.retained_fraction << ")\n";
    graphs = std::move(f.graphs);
  }
  if (graphs.empty()) {
    std::cerr << "no training graphs\n";
    return kData;
  }

  std::vector<CompiledGraph> eval_graphs;
  if (!a.eval_path.empty()) eval_graphs = load_compiled(a.eval_path, status);
  const ModelConfig eval_config = effective_model_config(cfg.model, cfg.optimizer);
  EvalHook hook;
  if (!eval_graphs.empty()) {
    hook = [&](std::int64_t step, const ModelParams& params) -> std::optional<double> {
      const double acc = evaluate(eval_graphs, params, eval_config);
      std::cout << "step " << step << " eval_accuracy " << acc << std::endl;
      return acc;
    };
  }

  fs::create_directories(a.out_dir);
  {
    auto os = open_out((fs::path(a.out_dir) / "config.txt").string());
    write_config(os, cfg);
  }
  MetricsLog log;
  TrainResult result = train(graphs, cfg.optimizer, cfg.model, cfg.train, hook, &log);
  {
    auto os = open_out((fs::path(a.out_dir) / "metrics.csv").string());
    log.write_csv(os);
  }
  save_checkpoint((fs::path(a.out_dir) / "checkpoint.bin").string(), result.state, cfg.model);
  std::cout << "steps " << result.state.step << ", graphs seen " << result.graphs_seen << ", epochs "
            << result.epochs_started << ", dropped edges " << result.dropped_edges << "/" << result.total_edges << '\n';
  if (!result.metrics.empty()) std::cout << "final loss " << result.metrics.back().loss << '\n';
  return status;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string in, checkpoint, config, metrics;
};

int cmd_eval(const EvalArgs& a) {
  LoadedCheckpoint ckpt = load_checkpoint(a.checkpoint);
  ModelConfig model = ckpt.config;
  if (!a.config.empty()) {
    const RunConfig cfg = resolve_config(a.config);
    check_compatible(ckpt, cfg.model);
    model = cfg.model;
  }
  int status = kOk;
  const auto graphs = load_compiled(a.in, status);
  if (graphs.empty()) {
    std::cerr << "no evaluation graphs\n";
    return kData;
  }
  const double acc = evaluate(graphs, ckpt.state.params, model);
  std::cout << "accuracy " << std::setprecision(17) << acc << '\n';
  if (!a.metrics.empty()) {
    const bool fresh = !fs::exists(a.metrics);
    std::ofstream os(a.metrics, std::ios::app);
    if (!os) throw std::invalid_argument("cannot append to " + a.metrics);
    if (fresh) os << MetricsLog::kHeader << '\n';
    os << std::setprecision(17) << ckpt.state.step << ",,,,," << acc << '\n';
  }
  return status;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string shape = "8,16,2,32";
  std::string backend = "banded";
  int iters = 10;
  std::uint64_t seed = 0;
  double density = 0.2;
};

int cmd_bench(const BenchArgs& a) {
  const auto dims = parse_int_list(a.shape);
  if (dims.size() != 4) throw UsageError("--shape expects K,S,P,H");
  for (auto d : dims) {
    if (d <= 0) throw UsageError("--shape entries must be positive");
  }
  if (a.iters <= 0) throw UsageError("--iters must be positive");
  const auto K = static_cast<std::int32_t>(dims[0]), S = static_cast<std::int32_t>(dims[1]);
  const auto P = static_cast<std::int32_t>(dims[2]), H = static_cast<std::int32_t>(dims[3]);
  const std::int32_t N = K * S;
  const Backend backend = parse_backend(a.backend);

  // Random graph whose edges all fall inside the covered band.
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Graph g;
  g.num_nodes = N;
  g.num_edge_types = P;
  for (std::int32_t p = 0; p < P; ++p) {
    for (NodeId i = 0; i < N; ++i) {
      for (NodeId j = std::max(0, i - S + 1); j < std::min(N, i + S); ++j) {
        if (unit(rng) < a.density) g.edges.push_back({p, j, i});
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.candidates = {0};

  ModelConfig mc;
  mc.hidden = H;
  mc.edge_types = P;
  mc.block_size = S;
  mc.num_features = 1;
  const ModelParams params = ModelParams::init(mc, a.seed);
  const Supergraph sg = single_supergraph(g, S);
  const PreparedBatch batch = prepare_batch(sg, backend);
  DenseArray<double> e = init_embeddings(sg, params);

  std::uint64_t measured = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int it = 0; it < a.iters; ++it) {
    MultiplyAddScope scope;
    switch (backend) {
      case Backend::Banded: {
        auto e3 = std::move(e).reshaped({static_cast<std::size_t>(K), static_cast<std::size_t>(S), static_cast<std::size_t>(H)});
        e = propagation_step(batch.banded, e3, params.edge_weights, params.edge_bias, params.gru)
                .reshaped({static_cast<std::size_t>(N), static_cast<std::size_t>(H)});
        break;
      }
      case Backend::Sparse:
        e = reference::sparse_step(batch.sparse, e, params.edge_weights, params.edge_bias, params.gru);
        break;
      case Backend::Dense:
        e = reference::dense_step(batch.dense, e, params.edge_weights, params.edge_bias, params.gru);
        break;
    }
    measured = scope.count();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / a.iters;
  std::uint64_t analytic = 0;
  switch (backend) {
    case Backend::Banded: analytic = banded_step_multiply_adds(K, S, P, H); break;
    case Backend::Sparse: analytic = sparse_step_multiply_adds(N, batch.sparse.num_edges(), H); break;
    case Backend::Dense: analytic = dense_step_multiply_adds(N, P, H); break;
  }
  std::cout << "backend,K,S,P,H,N,edges,seconds_per_step,measured_multiply_adds,analytic_multiply_adds,match\n"
            << backend_name(backend) << ',' << K << ',' << S << ',' << P << ',' << H << ',' << N << ','
            << g.edges.size() << ',' << secs << ',' << measured << ',' << analytic << ','
            << (measured == analytic ? "true" : "false") << '\n';
  return measured == analytic ? kOk : kNumerical;
}

// --- synth / sweep / convert -------------------------------------------------

int cmd_synth(const SynthOptions& o, const std::string& out) {
  auto os = open_out(out);
  write_graphs(os, synth_task(o));
  return kOk;
}

struct SweepArgs {
  std::string config, out_dir = "sweep";
  std::int32_t count = 10;
  std::uint64_t seed = 0;
  bool many_replicas = false;
};

int cmd_sweep(const SweepArgs& a) {
  const RunConfig base = resolve_config(a.config);
  const auto configs =
      sample_configs(base, a.many_replicas ? SweepSpace::many_replicas() : SweepSpace{}, a.count, a.seed);
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const fs::path path = fs::path(a.out_dir) / ("config_" + std::to_string(i) + ".txt");
    auto os = open_out(path.string());
    write_config(os, configs[i]);
    std::cout << path.string() << '\n';
  }
  return kOk;
}

int cmd_convert(const std::string& in, const std::string& out) {
  auto is = open_in(in);
  JsonlRead raw = read_jsonl(is);
  std::vector<std::string> names;
  std::vector<Graph> graphs;
  std::vector<RecordError> errors = raw.errors;
  for (std::size_t i = 0; i < raw.records.size(); ++i) {
    try {
      graphs.push_back(convert_program_graph(raw.records[i], names));
    } catch (const std::exception& e) {
      errors.push_back({raw.lines[i], e.what()});
    }
  }
  auto os = open_out(out);
  const auto types = static_cast<std::int32_t>(std::max<std::size_t>(names.size(), 1));
  for (auto& g : graphs) {
    g.num_edge_types = types;
    try {
      validate_or_throw(g);
      os << to_jsonl_line(graph_to_json(g)) << '\n';
    } catch (const std::exception& e) {
      errors.push_back({0, e.what()});
    }
  }
  std::cout << "converted " << graphs.size() << " samples with " << types << " edge types\n";
  for (std::size_t t = 0; t < names.size(); ++t) std::cout << t << ' ' << names[t] << '\n';
  return report_errors(errors, in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile program graphs into block-banded form and train gated graph networks."};
  app.require_subcommand(1);

  CompileArgs compile_args;
  auto* compile = app.add_subcommand("compile", "Reachability pruning and RCMK reordering");
  compile->add_option("input", compile_args.in, "Canonical JSONL graphs")->required();
  compile->add_option("output", compile_args.out, "Compiled JSONL output")->required();
  compile->add_option("--steps", compile_args.steps, "Propagation steps T for reachability")->check(CLI::PositiveNumber);
  compile->add_option("--threads", compile_args.threads)->check(CLI::PositiveNumber);

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Bandwidth fractions and histograms of a compiled dataset");
  stats->add_option("input", stats_args.in)->required();
  stats->add_option("--bounds", stats_args.bounds, "Comma-separated bandwidth bounds");
  stats->add_option("--histograms", stats_args.histograms, "Write histogram CSV here instead of stdout");

  TrainArgs train_args;
  auto* trn = app.add_subcommand("train", "Train on a compiled dataset");
  trn->add_option("input", train_args.in)->required();
  trn->add_option("--config", train_args.config, "key=value config file");
  trn->add_option("--block-size", train_args.block_size);
  trn->add_option("--replicas", train_args.replicas);
  trn->add_option("--node-budget", train_args.node_budget);
  trn->add_option("--filter", train_args.filter, "bandwidth<b or order<n");
  trn->add_option("--steps", train_args.steps);
  trn->add_option("--seed", train_args.seed);
  trn->add_option("--threads", train_args.threads);
  trn->add_option("--eval", train_args.eval_path, "Compiled JSONL evaluated with the sparse backend");
  trn->add_option("--eval-every", train_args.eval_every);
  trn->add_option("--out-dir", train_args.out_dir);
  trn->add_flag("--deterministic", train_args.deterministic, "Omit wall-clock columns from the metrics log");

  EvalArgs eval_args;
  auto* evl = app.add_subcommand("eval", "Sparse-backend accuracy of a checkpoint");
  evl->add_option("input", eval_args.in)->required();
  evl->add_option("checkpoint", eval_args.checkpoint)->required();
  evl->add_option("--config", eval_args.config);
  evl->add_option("--metrics", eval_args.metrics, "Append the accuracy to this metrics CSV");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time one propagation step and check multiply-add counts");
  bench->add_option("--shape", bench_args.shape, "K,S,P,H");
  bench->add_option("--backend", bench_args.backend)->check(CLI::IsMember({"banded", "sparse", "dense"}));
  bench->add_option("--iters", bench_args.iters);
  bench->add_option("--seed", bench_args.seed);
  bench->add_option("--density", bench_args.density)->check(CLI::Range(0.0, 1.0));

  SynthOptions synth_opts;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic candidate-selection task");
  synth->add_option("output", synth_out)->required();
  synth->add_option("--num-graphs", synth_opts.num_graphs);
  synth->add_option("--min-nodes", synth_opts.min_nodes);
  synth->add_option("--max-nodes", synth_opts.max_nodes);
  synth->add_option("--candidates", synth_opts.num_candidates);
  synth->add_option("--edge-types", synth_opts.edge_types);
  synth->add_option("--max-path", synth_opts.max_path);
  synth->add_option("--num-features", synth_opts.num_features);
  synth->add_option("--seed", synth_opts.seed);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Sample hyperparameter configs");
  sweep->add_option("--config", sweep_args.config, "Base config");
  sweep->add_option("--count", sweep_args.count);
  sweep->add_option("--seed", sweep_args.seed);
  sweep->add_option("--out-dir", sweep_args.out_dir);
  sweep->add_flag("--many-replicas", sweep_args.many_replicas, "Use the larger learning-rate grid");

  std::string convert_in, convert_out;
  auto* convert = app.add_subcommand("convert", "Best-effort import of externally produced program graphs");
  convert->add_option("input", convert_in)->required();
  convert->add_option("output", convert_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*compile) return cmd_compile(compile_args);
    if (*stats) return cmd_stats(stats_args);
    if (*trn) return cmd_train(train_args);
    if (*evl) return cmd_eval(eval_args);
    if (*bench) return cmd_bench(bench_args);
    if (*synth) return cmd_synth(synth_opts, synth_out);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*convert) return cmd_convert(convert_in, convert_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
