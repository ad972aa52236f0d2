// noisyfp command-line front end: gen | exact | stream | dist | bench.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noisyfp/dataset_io.hpp"
#include "noisyfp/distsim.hpp"
#include "noisyfp/error.hpp"
#include "noisyfp/exact.hpp"
#include "noisyfp/generators.hpp"
#include "noisyfp/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace noisyfp;

namespace {

enum ExitCode { kOk = 0, kBug = 1, kConfig = 2, kProtocolFail = 3, kBudget = 4 };

struct Globals {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string format = "csv";
};

struct GenOptions {
  std::string kind = "cluster";
  std::string out;
  std::string in;
  std::vector<std::size_t> sizes;
  std::size_t m = 0;
  std::size_t clique_size = 10;
  std::string order = "grouped";
  std::size_t flips = 0;
  double target_eta = -1;
  double p = 2;
  std::string instance = "yes";
  double epsilon = 0.2;
  std::size_t k = 40;
  std::string construction = "sym-diff";
  std::size_t clique = 32;
};

struct RunOptions {
  ExperimentConfig config;
  std::string in;
  double epsilon = 0.25;
  std::size_t k = 4;
  std::size_t m = 0;
  double eta_target = -1;
  std::size_t kpartite_clique = 0;
};

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

std::string output_path(const Globals& g, const std::string& explicit_path, const std::string& name) {
  if (!explicit_path.empty()) return explicit_path;
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

void write_partition(const std::string& dataset_path, const SitePartition& partition) {
  const auto path = dataset_path + ".partition.csv";
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_partition_csv(out, partition);
  std::cerr << "partition map: " << path << '\n';
}

int run_gen(const Globals& g, const GenOptions& o) {
  const auto path = output_path(g, o.out, "dataset.jsonl");
  json info = {{"kind", o.kind}, {"seed", g.seed}, {"path", path}};
  if (o.kind == "cluster") {
    auto sizes = o.sizes;
    if (sizes.empty()) {
      if (o.m == 0 || o.clique_size == 0) throw ConfigError("cluster needs --sizes or --m with --clique-size");
      sizes.assign(o.m / o.clique_size, o.clique_size);
      if (o.m % o.clique_size) sizes.push_back(o.m % o.clique_size);
    }
    const auto ds = gen_cluster(sizes, parse_cluster_order(o.order), g.seed);
    save_dataset(path, ds);
    info["m"] = ds.size();
  } else if (o.kind == "perturbed") {
    if (o.in.empty()) throw ConfigError("perturbed needs --in <base dataset>");
    const auto base = load_dataset(o.in);
    std::size_t added = o.flips;
    const auto ds = o.target_eta >= 0 ? gen_target_eta(base, o.p, o.target_eta, g.seed, &added)
                                      : gen_perturbed(base, o.flips, g.seed);
    save_dataset(path, ds);
    info["m"] = ds.size();
    info["flips_added"] = added;
    info["eta_p"] = eta_p(ds, o.p);
  } else if (o.kind == "disj-reduction") {
    ReductionParams params;
    params.p = static_cast<unsigned>(o.p);
    if (params.p != o.p) throw ConfigError("the reduction needs an integral p");
    params.epsilon = o.epsilon;
    params.m = o.m == 0 ? 10000 : o.m;
    params.k = o.k;
    params.construction = parse_construction(o.construction);
    const auto resolved = resolve_reduction(params);
    if (o.instance != "yes" && o.instance != "no") throw ConfigError("--instance must be yes or no");
    const auto inst = gen_disj(resolved.n, resolved.k, o.instance == "yes" ? DisjKind::kYes : DisjKind::kNo,
                               derive_seed(g.seed, StreamTag::kGenerator, 0));
    const auto out = reduce_disj_to_dataset(inst, params, g.seed);
    save_dataset(path, out.dataset);
    write_partition(path, out.partition);
    info["m"] = out.dataset.size();
    info["t"] = resolved.t;
    info["n"] = resolved.n;
    info["s"] = resolved.s;
    info["construction"] = to_string(resolved.construction);
    info["i_star"] = optional_json(inst.i_star);
  } else if (o.kind == "kpartite") {
    if (o.m == 0) throw ConfigError("kpartite needs --m");
    const auto out = gen_kpartite_adversary(o.m, o.clique, o.k, g.seed);
    save_dataset(path, out.dataset);
    write_partition(path, out.partition);
    info["m"] = out.dataset.size();
    info["clique_size"] = out.clique_size;
  } else {
    throw ConfigError("unknown --kind '" + o.kind + "'");
  }
  std::cout << info.dump() << '\n';
  return kOk;
}

int run_exact(const std::string& in, double p, bool skip_cliques) {
  const auto ds = load_dataset(in);
  const auto r = exact_report(ds, p, skip_cliques);
  json j = {{"p", r.p},
            {"m", r.m},
            {"f_p", optional_json(r.f_p)},
            {"k_p_sigma", optional_json(r.k_p_sigma)},
            {"k_p_tau", optional_json(r.k_p_tau)},
            {"diff_sigma_minus_tau", optional_json(r.diff_sigma_minus_tau)},
            {"diff_tau_minus_sigma", optional_json(r.diff_tau_minus_sigma)},
            {"eta_p", optional_json(r.eta_p)},
            {"degree_moment_sigma", r.degree_moment_sigma},
            {"degree_moment_tau", optional_json(r.degree_moment_tau)}};
  std::cout << j.dump() << '\n';
  return kOk;
}

int run_config(const Globals& g, const ExperimentConfig& config) {
  const auto rows = run_sweep(config);
  write_sweep_outputs(g.out_dir, config, rows, g.format);
  std::cout << report_summary(rows).dump(2) << '\n';
  for (const auto& row : rows) {
    if (row.failed) {
      std::cerr << "protocol FAIL after retries in cell " << row.cell << ", trial " << row.trial << '\n';
      return kProtocolFail;
    }
  }
  return kOk;
}

ExperimentConfig single_cell(const Globals& g, RunOptions o, const std::string& mode) {
  auto c = o.config;
  c.mode = mode;
  c.seed = g.seed;
  c.epsilons = {o.epsilon};
  c.ks = {o.k};
  if (o.eta_target >= 0) c.eta_targets = {o.eta_target};
  if (!o.in.empty()) {
    c.dataset.kind = "file";
    c.dataset.path = fs::absolute(o.in).string();
  } else if (o.kpartite_clique > 0) {
    c.dataset.kind = "kpartite";
    c.dataset.adversary_clique = o.kpartite_clique;
  }
  if (o.m > 0) c.dataset.m = o.m;
  if (!c.partition_file.empty()) c.partition_file = fs::absolute(c.partition_file).string();
  return c;
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  auto& c = o.config;
  cmd->add_option("--in", o.in, "Dataset file (JSON lines); default: generated cluster dataset");
  cmd->add_option("--m", o.m, "Size of the generated dataset")->capture_default_str();
  cmd->add_option("--clique-size", c.dataset.clique_size, "Clique size of the generated cluster dataset")
      ->capture_default_str();
  cmd->add_option("--eta-target", o.eta_target, "Inject random flips until eta_p reaches this value");
  cmd->add_option("--p", c.p, "Moment order p")->capture_default_str();
  cmd->add_option("--epsilon", o.epsilon, "Accuracy parameter")->capture_default_str();
  cmd->add_option("--scale-c", c.scale_c, "Leading constant of t (analysis value: 1e6)")->capture_default_str();
  cmd->add_option("--ell", c.ell, "Number of groups for the min of means (analysis value: 100)")
      ->capture_default_str();
  cmd->add_option("--t-override", c.t_override, "Use this t instead of the formula");
  cmd->add_option("--trials", c.trials, "Independent trials")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency moments of noisy datasets through a similarity oracle"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--format", g.format, "Result file format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a dataset");
  gen_cmd->add_option("--kind", gen.kind, "cluster | perturbed | disj-reduction | kpartite")
      ->check(CLI::IsMember({"cluster", "perturbed", "disj-reduction", "kpartite"}))
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output file (default: <out-dir>/dataset.jsonl)");
  gen_cmd->add_option("--in", gen.in, "Base dataset for --kind perturbed");
  gen_cmd->add_option("--sizes", gen.sizes, "Clique sizes for --kind cluster")->delimiter(',');
  gen_cmd->add_option("--m", gen.m, "Dataset size (disj-reduction default 10000)");
  gen_cmd->add_option("--clique-size", gen.clique_size, "Clique size when --sizes is absent")
      ->capture_default_str();
  gen_cmd->add_option("--order", gen.order, "grouped | interleaved | shuffled")->capture_default_str();
  gen_cmd->add_option("--flips", gen.flips, "Number of random flips (perturbed)")->capture_default_str();
  gen_cmd->add_option("--target-eta", gen.target_eta, "Add flips until eta_p reaches this (perturbed)");
  gen_cmd->add_option("--p", gen.p, "Moment order p")->capture_default_str();
  gen_cmd->add_option("--instance", gen.instance, "DISJ instance: yes | no")->capture_default_str();
  gen_cmd->add_option("--epsilon", gen.epsilon, "Reduction epsilon in (0, 1/3)")->capture_default_str();
  gen_cmd->add_option("--k", gen.k, "Players (disj-reduction) or sites (kpartite)")->capture_default_str();
  gen_cmd->add_option("--construction", gen.construction, "sym-diff | compact")->capture_default_str();
  gen_cmd->add_option("--clique", gen.clique, "Adversarial clique size (kpartite)")->capture_default_str();

  std::string exact_in;
  double exact_p = 2;
  bool skip_cliques = false;
  auto* exact_cmd = app.add_subcommand("exact", "Exact oracle report as JSON");
  exact_cmd->add_option("--in", exact_in, "Dataset file")->required();
  exact_cmd->add_option("--p", exact_p, "Moment order p")->capture_default_str();
  exact_cmd->add_flag("--skip-cliques", skip_cliques, "Skip the m^p clique enumeration");

  RunOptions stream;
  auto* stream_cmd = app.add_subcommand("stream", "One-pass streaming estimate");
  add_run_options(stream_cmd, stream);
  stream_cmd->add_option("--engine", stream.config.engine, "deferred | pooled | naive")
      ->check(CLI::IsMember({"deferred", "pooled", "naive"}))
      ->capture_default_str();

  RunOptions dist;
  dist.config.scale_c = 20;
  dist.config.ell = 10;
  auto* dist_cmd = app.add_subcommand("dist", "Coordinator-model estimate");
  add_run_options(dist_cmd, dist);
  dist_cmd->add_option("--alg", dist.config.protocol, "alg3 | alg4 | naive")
      ->check(CLI::IsMember({"alg3", "alg4", "naive"}))
      ->capture_default_str();
  dist_cmd->add_option("--k", dist.k, "Number of sites")->capture_default_str();
  dist_cmd->add_option("--theta-override", dist.config.theta_override,
                       "Truncation threshold (default: 2(4k/eps)^(p-1))");
  dist_cmd->add_option("--partition", dist.config.partition, "round-robin | contiguous | hash | file")
      ->check(CLI::IsMember({"round-robin", "contiguous", "hash", "file"}))
      ->capture_default_str();
  dist_cmd->add_option("--partition-file", dist.config.partition_file, "node,site CSV for --partition file");
  dist_cmd->add_option("--kpartite-clique", dist.kpartite_clique,
                       "Use the adversarial k-partite dataset with this clique size");
  dist_cmd->add_option("--median-runs", dist.config.median_runs, "Odd number of runs per median")
      ->capture_default_str();
  dist_cmd->add_option("--max-retries", dist.config.max_retries, "Retries after an Algorithm 3 FAIL")
      ->capture_default_str();

  std::string bench_config;
  bool bench_template = false;
  auto* bench_cmd = app.add_subcommand("bench", "Run a stored ExperimentConfig sweep");
  bench_cmd->add_option("--config", bench_config, "ExperimentConfig JSON file");
  bench_cmd->add_flag("--template", bench_template, "Print a default config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*gen_cmd) return run_gen(g, gen);
    if (*exact_cmd) return run_exact(exact_in, exact_p, skip_cliques);
    if (*stream_cmd) return run_config(g, single_cell(g, stream, "stream"));
    if (*dist_cmd) return run_config(g, single_cell(g, dist, "dist"));
    if (bench_template) {
      std::cout << to_json(ExperimentConfig{}).dump(2) << '\n';
      return kOk;
    }
    if (bench_config.empty()) throw ConfigError("bench needs --config or --template");
    return run_config(g, load_config(bench_config));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const MissingGroundTruth& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBug;
  }
}
