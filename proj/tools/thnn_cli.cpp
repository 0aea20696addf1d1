// thnn: command-line front end for building hypergraphs, training, sweeps,
// self-verification and benchmarks.
#include "thnn/bench.hpp"
#include "thnn/io.hpp"
#include "thnn/verify.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace thnn;

namespace {

constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

// Comma-separated integers; an empty list or item is a usage error.
template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    T v{};
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError(flag + ": expected a comma-separated list of integers, got '" + text + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

// ---- generate ----

struct GenerateArgs {
  Index vertices = 600;
  Index order = 3;
  int classes = 2;
  double noise = 0.0;
  std::uint64_t seed = 0;
  fs::path hypergraph_out;
  fs::path features_out;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  auto* cmd = app.add_subcommand("generate", "Synthetic high-order task (disjoint hyperedges)");
  cmd->add_option("--vertices", a.vertices, "Vertex count, a multiple of --order")->capture_default_str();
  cmd->add_option("--order", a.order, "Hyperedge size")->capture_default_str();
  cmd->add_option("--classes", a.classes, "Class count")->capture_default_str();
  cmd->add_option("--noise", a.noise, "Feature noise standard deviation")->capture_default_str();
  cmd->add_option("--seed", a.seed)->capture_default_str();
  cmd->add_option("--hypergraph", a.hypergraph_out, "Output hypergraph file")->required();
  cmd->add_option("--features", a.features_out, "Output feature file")->required();
}

int run_generate(const GenerateArgs& a) {
  const auto [h, data] = synthetic_highorder(a.vertices, a.order, a.classes, a.noise, a.seed);
  {
    auto os = open_output(a.hypergraph_out);
    write_hypergraph(os, h);
  }
  {
    auto os = open_output(a.features_out);
    write_features(os, data);
  }
  std::cout << "wrote " << h.num_vertices() << " vertices, " << h.num_edges() << " hyperedges\n";
  return 0;
}

// ---- build ----

struct BuildArgs {
  fs::path features;
  Index k = 4;
  std::string mode = "uniform";
  std::uint64_t seed = 0;
  fs::path out;
};

void add_build(CLI::App& app, BuildArgs& a) {
  auto* cmd = app.add_subcommand("build", "Build a kNN hypergraph from a feature file");
  cmd->add_option("--features", a.features, "Input feature file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--k", a.k, "Hyperedge size (centroid plus k-1 neighbours)")->capture_default_str();
  cmd->add_option("--mode", a.mode, "uniform or bernoulli")
      ->check(CLI::IsMember({"uniform", "bernoulli"}))
      ->capture_default_str();
  cmd->add_option("--seed", a.seed, "Sampling seed for bernoulli mode")->capture_default_str();
  cmd->add_option("--out", a.out, "Output hypergraph file")->required();
}

int run_build(const BuildArgs& a) {
  const FeatureDataset data = load_features(a.features);
  const Hypergraph h = a.mode == "uniform"
                           ? knn_hypergraph(data.features, a.k)
                           : bernoulli_sample(probabilistic_incidence(data.features, a.k), a.seed);
  auto os = open_output(a.out);
  write_hypergraph(os, h);
  std::cout << "wrote " << h.num_edges() << " hyperedges on " << h.num_vertices()
            << " vertices\n";
  return 0;
}

// ---- train / sweep shared options ----

struct TrainArgs {
  fs::path hypergraph;
  fs::path features;
  std::string model = "thnn";
  std::string nonuniform_mode = "uniform";
  TrainConfig config;
  bool no_concat_one = false;
  bool no_inner_tanh = false;
  fs::path config_file;
  CLI::App* cmd = nullptr;
  CLI::Option* lr_option = nullptr;
};

// Fills options not given on the command line from a TOML/INI file.
void apply_config_file(CLI::App& cmd, const fs::path& path) {
  const auto items = CLI::ConfigTOML().from_file(path.string());
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = cmd.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") {
      throw UsageError(path.string() + ": unknown option '" + item.fullname() + "'");
    }
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

void add_training_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--hypergraph", a.hypergraph, "Hypergraph file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--features", a.features, "Feature file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--model", a.model, "thnn, hgnn or gcn")
      ->check(CLI::IsMember({"thnn", "hgnn", "gcn"}))
      ->capture_default_str();
  cmd->add_option("--nonuniform-mode", a.nonuniform_mode, "uniform, global-node or multi-uniform")
      ->check(CLI::IsMember({"uniform", "global-node", "multi-uniform"}))
      ->capture_default_str();
  cmd->add_option("--rank", a.config.rank, "CP rank")->capture_default_str();
  cmd->add_option("--layers", a.config.layers)->capture_default_str();
  cmd->add_option("--hidden", a.config.hidden_dim, "Hidden width")->capture_default_str();
  a.lr_option = cmd->add_option("--lr", a.config.learning_rate,
                                "Adam step size [default: 0.001 uniform, 0.005 extensions]");
  cmd->add_option("--epochs", a.config.epochs)->capture_default_str();
  cmd->add_option("--patience", a.config.patience, "Early stopping patience, 0 disables")
      ->capture_default_str();
  cmd->add_option("--seed", a.config.seed)->capture_default_str();
  cmd->add_flag("--no-concat-one", a.no_concat_one, "Drop the constant-1 feature");
  cmd->add_flag("--no-inner-tanh", a.no_inner_tanh, "Drop the per-hyperedge tanh");
  cmd->add_option("--config", a.config_file, "TOML/INI file with option values; flags override")
      ->check(CLI::ExistingFile);
  a.cmd = cmd;
}

TrainConfig resolve(TrainArgs& a) {
  if (!a.config_file.empty()) apply_config_file(*a.cmd, a.config_file);
  TrainConfig c = a.config;
  c.model = parse_model_kind(a.model);
  c.nonuniform_mode = parse_nonuniform_mode(a.nonuniform_mode);
  c.use_concat_one = !a.no_concat_one;
  c.use_inner_tanh = !a.no_inner_tanh;
  if (a.lr_option->count() == 0) c.learning_rate = default_learning_rate(c.nonuniform_mode);
  c.validate();
  return c;
}

// ---- train ----

struct TrainCmd {
  TrainArgs args;
  fs::path out_dir = ".";
};

void add_train(CLI::App& app, TrainCmd& t) {
  auto* cmd = app.add_subcommand("train", "Train a model; writes model.json, metrics.csv, manifest.json");
  add_training_options(cmd, t.args);
  cmd->add_option("--out-dir", t.out_dir, "Output directory")->capture_default_str();
}

int run_train(TrainCmd& t, const std::string& command) {
  const TrainConfig config = resolve(t.args);
  const Hypergraph h = load_hypergraph(t.args.hypergraph);
  const FeatureDataset data = load_features(t.args.features);
  if (data.num_vertices() != h.num_vertices()) {
    throw std::runtime_error("feature file has " + std::to_string(data.num_vertices()) +
                             " vertices, hypergraph has " + std::to_string(h.num_vertices()));
  }
  const TrainResult r = train(config, data, h);

  fs::create_directories(t.out_dir);
  const fs::path model_path = t.out_dir / "model.json";
  const fs::path metrics_path = t.out_dir / "metrics.csv";
  const fs::path manifest_path = t.out_dir / "manifest.json";
  save_model(model_path, *r.model, config, data.features.cols(), data.num_classes);
  {
    auto os = open_output(metrics_path);
    write_metrics_csv(os, r.history);
  }
  save_manifest(manifest_path, {command, config_to_json(config), {config.seed},
                                {t.args.hypergraph, t.args.features},
                                {model_path, metrics_path}});

  std::cout << "model " << r.model->kind() << ", " << r.model->num_scalars() << " parameters, "
            << r.history.size() << " epochs, best epoch " << r.best_epoch << '\n';
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (data.indices(s).empty()) continue;
    std::cout << split_name(s) << " accuracy " << format_double(evaluate(*r.model, data, s)) << '\n';
  }
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  fs::path model;
  fs::path hypergraph;
  fs::path features;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* cmd = app.add_subcommand("evaluate", "Accuracy of a saved model per split");
  cmd->add_option("--model", a.model, "Model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--hypergraph", a.hypergraph, "Hypergraph file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--features", a.features, "Feature file")->required()->check(CLI::ExistingFile);
}

int run_evaluate(const EvaluateArgs& a) {
  const Hypergraph h = load_hypergraph(a.hypergraph);
  const FeatureDataset data = load_features(a.features);
  const auto model = load_model(a.model, h);
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (data.indices(s).empty()) continue;
    std::cout << split_name(s) << " accuracy " << format_double(evaluate(*model, data, s)) << '\n';
  }
  return 0;
}

// ---- sweep ----

struct SweepCmd {
  TrainArgs args;
  std::string axis = "rank";
  std::string values;
  std::string seeds = "0,1,2,3,4";
  fs::path out = "sweep.csv";
};

void add_sweep(CLI::App& app, SweepCmd& s) {
  auto* cmd = app.add_subcommand("sweep", "Test accuracy over rank or depth, several seeds each");
  add_training_options(cmd, s.args);
  cmd->add_option("--axis", s.axis, "rank or layers")
      ->check(CLI::IsMember({"rank", "layers"}))
      ->capture_default_str();
  cmd->add_option("--values", s.values, "Comma-separated axis values")->required();
  cmd->add_option("--seeds", s.seeds, "Comma-separated seeds")->capture_default_str();
  cmd->add_option("--out", s.out, "Output CSV")->capture_default_str();
}

int run_sweep(SweepCmd& s) {
  const auto values = parse_list<Index>(s.values, "--values");
  const auto seeds = parse_list<std::uint64_t>(s.seeds, "--seeds");
  const TrainConfig config = resolve(s.args);
  const Hypergraph h = load_hypergraph(s.args.hypergraph);
  const FeatureDataset data = load_features(s.args.features);
  const SweepResult r = sweep(config, parse_sweep_axis(s.axis), values, seeds, data, h);
  {
    auto os = open_output(s.out);
    write_sweep_csv(os, r);
  }
  std::cout << s.axis << ",mean_test_acc,std_test_acc\n";
  for (const auto& row : r.summary) {
    std::cout << row.axis_value << ',' << format_double(row.mean) << ','
              << format_double(row.stddev) << '\n';
  }
  return 0;
}

// ---- verify ----

struct VerifyArgs {
  std::uint64_t seed = 0;
  bool plant_fault = false;
};

void add_verify(CLI::App& app, VerifyArgs& a) {
  auto* cmd = app.add_subcommand("verify", "Run the self-check suites; exit 0 iff all pass");
  cmd->add_option("--seed", a.seed)->capture_default_str();
  cmd->add_flag("--plant-fault", a.plant_fault,
                "Corrupt one dense weight entry (negative control, must fail)");
}

int run_verify(const VerifyArgs& a) {
  VerifyOptions opts;
  opts.seed = a.seed;
  opts.plant_fault = a.plant_fault;
  bool ok = true;
  for (const auto& r : run_verification(opts)) {
    ok = ok && r.passed();
    std::printf("%-30s %s  cases=%d  max_error=%.3e  tol=%.0e  %.2fs\n", r.name.c_str(),
                r.passed() ? "PASS" : "FAIL", r.cases, r.max_error, r.tolerance, r.seconds);
  }
  return ok ? 0 : 1;
}

// ---- bench ----

struct BenchArgs {
  BenchOptions opts;
  std::string orders = "3,4";
  std::string edges = "100,1000,10000";
  fs::path out = "bench.csv";
};

void add_bench(CLI::App& app, BenchArgs& a) {
  auto* cmd = app.add_subcommand("bench", "Time the factorized forward pass against |E|");
  cmd->add_option("--orders", a.orders, "Comma-separated hyperedge sizes")->capture_default_str();
  cmd->add_option("--edges", a.edges, "Comma-separated hyperedge counts")->capture_default_str();
  cmd->add_option("--rank", a.opts.rank)->capture_default_str();
  cmd->add_option("--dim", a.opts.dim, "Input and output width")->capture_default_str();
  cmd->add_option("--seed", a.opts.seed)->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV")->capture_default_str();
}

int run_bench_cmd(BenchArgs& a) {
  a.opts.orders = parse_list<Index>(a.orders, "--orders");
  a.opts.edges = parse_list<Index>(a.edges, "--edges");
  for (Index k : a.opts.orders) {
    if (k < 2) throw UsageError("--orders: hyperedge sizes must be at least 2");
  }
  for (Index m : a.opts.edges) {
    if (m < 1) throw UsageError("--edges: counts must be positive");
  }
  const auto rows = run_bench(a.opts);
  {
    auto os = open_output(a.out);
    write_bench_csv(os, rows);
  }
  write_bench_csv(std::cout, rows);
  if (a.opts.edges.size() >= 2) {
    for (Index k : a.opts.orders) {
      std::cout << "order " << k << ": log-log slope " << format_double(time_slope(rows, k))
                << '\n';
    }
  }
  return 0;
}

// ---- check-manifest ----

int run_check_manifest(const fs::path& path) {
  const auto problems = check_manifest(path);
  for (const auto& p : problems) std::cerr << p << '\n';
  std::cout << (problems.empty() ? "manifest ok\n" : "manifest mismatch\n");
  return problems.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensorized hypergraph neural networks"};
  app.require_subcommand(1);

  GenerateArgs gen;
  BuildArgs build;
  TrainCmd train_cmd;
  EvaluateArgs eval;
  SweepCmd sweep_cmd;
  VerifyArgs verify;
  BenchArgs bench;
  fs::path manifest;
  add_generate(app, gen);
  add_build(app, build);
  add_train(app, train_cmd);
  add_evaluate(app, eval);
  add_sweep(app, sweep_cmd);
  add_verify(app, verify);
  add_bench(app, bench);
  app.add_subcommand("check-manifest", "Re-hash the inputs and outputs listed in a manifest")
      ->add_option("manifest", manifest)
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "generate") return run_generate(gen);
    if (name == "build") return run_build(build);
    if (name == "train") return run_train(train_cmd, join_args(argc, argv));
    if (name == "evaluate") return run_evaluate(eval);
    if (name == "sweep") return run_sweep(sweep_cmd);
    if (name == "verify") return run_verify(verify);
    if (name == "bench") return run_bench_cmd(bench);
    return run_check_manifest(manifest);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
