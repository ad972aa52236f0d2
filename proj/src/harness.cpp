#include "noisyfp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "noisyfp/dataset_io.hpp"
#include "noisyfp/distsim.hpp"
#include "noisyfp/error.hpp"
#include "noisyfp/estimators.hpp"
#include "noisyfp/exact.hpp"
#include "noisyfp/generators.hpp"
#include "noisyfp/streaming.hpp"

namespace noisyfp {

namespace {

using nlohmann::json;

template <class T>
T read_field(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

template <class T>
std::optional<T> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return read_field<T>(j, key, T{});
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(std::string("unknown ") + where + " key '" + key + "'");
  }
}

SamplerEngine parse_engine(const std::string& name) {
  if (name == "deferred") return SamplerEngine::kDeferred;
  if (name == "pooled") return SamplerEngine::kPooled;
  if (name == "naive") return SamplerEngine::kNaive;
  throw ConfigError("unknown sampler engine '" + name + "'");
}

struct Cell {
  std::size_t index = 0;
  std::size_t m = 0;
  std::optional<double> eta_target;
  double epsilon = 0;
  std::size_t k = 1;
};

std::vector<Cell> expand_cells(const ExperimentConfig& config) {
  std::vector<std::size_t> ms = config.ms;
  if (ms.empty()) ms.push_back(config.dataset.kind == "file" ? 0 : config.dataset.m);
  std::vector<std::optional<double>> etas;
  for (double e : config.eta_targets) etas.emplace_back(e);
  if (etas.empty()) etas.emplace_back(std::nullopt);
  std::vector<std::size_t> ks = config.mode == "dist" ? config.ks : std::vector<std::size_t>{1};
  std::vector<Cell> cells;
  for (auto m : ms)
    for (const auto& eta : etas)
      for (double eps : config.epsilons)
        for (auto k : ks) cells.push_back({cells.size(), m, eta, eps, k});
  return cells;
}

void validate(const ExperimentConfig& config) {
  if (config.version != 1) throw ConfigError("unsupported config version");
  if (config.mode != "stream" && config.mode != "dist") {
    throw ConfigError("mode must be 'stream' or 'dist'");
  }
  if (config.mode == "dist") parse_protocol(config.protocol);
  parse_engine(config.engine);
  if (!(config.p >= 1)) throw ConfigError("p must be at least 1");
  if (config.mode == "stream" && !is_integral(config.p)) {
    throw ConfigError("the streaming estimator needs an integral p");
  }
  if (config.trials == 0) throw ConfigError("trials must be positive");
  if (config.epsilons.empty()) throw ConfigError("at least one epsilon is required");
  if (config.mode == "dist" && config.ks.empty()) throw ConfigError("at least one k is required");
  if (config.median_runs == 0 || config.median_runs % 2 == 0) {
    throw ConfigError("median_runs must be odd");
  }
  const auto& kind = config.dataset.kind;
  if (kind != "cluster" && kind != "file" && kind != "kpartite") {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
  if (kind == "file" && !config.ms.empty()) throw ConfigError("an m axis needs a generated dataset");
  if (kind == "kpartite" && config.mode != "dist") {
    throw ConfigError("the kpartite dataset carries a partition and needs mode 'dist'");
  }
  if (config.partition == "file" && config.partition_file.empty()) {
    throw ConfigError("partition 'file' needs partition_file");
  }
}

struct CellData {
  Dataset dataset;
  std::optional<SitePartition> partition;
};

CellData build_cell(const ExperimentConfig& config, const Cell& cell) {
  const auto gen_seed = derive_seed(config.seed, StreamTag::kGenerator, cell.index);
  const auto& spec = config.dataset;
  std::optional<Dataset> ds;
  std::optional<SitePartition> partition;
  if (spec.kind == "file") {
    if (!std::filesystem::exists(spec.path)) throw ConfigError("dataset file not found: " + spec.path);
    ds = load_dataset(spec.path);
  } else if (spec.kind == "cluster") {
    std::vector<std::size_t> sizes = spec.sizes;
    if (sizes.empty() || !config.ms.empty()) {
      if (spec.clique_size == 0) throw ConfigError("clique_size must be positive");
      sizes.assign(cell.m / spec.clique_size, spec.clique_size);
      if (cell.m % spec.clique_size) sizes.push_back(cell.m % spec.clique_size);
    }
    ds = gen_cluster(sizes, parse_cluster_order(spec.order), gen_seed);
  } else {
    auto adv = gen_kpartite_adversary(cell.m, spec.adversary_clique, cell.k, gen_seed);
    ds = std::move(adv.dataset);
    partition = std::move(adv.partition);
  }
  if (cell.eta_target) {
    ds = gen_target_eta(*ds, config.p, *cell.eta_target, derive_seed(gen_seed, StreamTag::kGenerator, 1));
  }
  if (config.mode == "dist" && !partition) {
    const auto scheme = parse_partition_scheme(config.partition);
    if (scheme == PartitionScheme::kExplicit) {
      std::ifstream in(config.partition_file);
      if (!in) throw ConfigError("partition file not found: " + config.partition_file);
      partition = read_partition_csv(in, ds->size(), cell.k);
    } else {
      partition = partition_dataset(ds->size(), cell.k, scheme,
                                    derive_seed(config.seed, StreamTag::kPartition, cell.index));
    }
  }
  return {std::move(*ds), std::move(partition)};
}

struct Truth {
  std::optional<double> f_p;
  std::optional<double> eta;
  std::string note;
};

Truth ground_truth(const Dataset& ds, double p) {
  Truth truth;
  if (!ds.has_ground_truth()) {
    truth.note = "no ground truth";
    return truth;
  }
  try {
    truth.f_p = is_integral(p) ? static_cast<double>(exact_fp(ds, static_cast<unsigned>(p)))
                               : frequency_moment(ds, p);
    truth.eta = eta_p(ds, p);
  } catch (const ConfigError& e) {
    truth.note = e.what();
  } catch (const BudgetExceeded& e) {
    truth.note = e.what();
  }
  return truth;
}

ResultRow run_trial(const ExperimentConfig& config, const Cell& cell, const CellData& data,
                    std::size_t trial) {
  ResultRow row;
  row.cell = cell.index;
  row.trial = trial;
  row.seed = derive_seed(derive_seed(config.seed, StreamTag::kTrial, cell.index), StreamTag::kTrial, trial);
  row.m = data.dataset.size();
  row.k = cell.k;
  row.p = config.p;
  row.epsilon = cell.epsilon;
  row.eta_target = cell.eta_target;
  const auto start = std::chrono::steady_clock::now();
  if (config.mode == "stream") {
    StreamParams params;
    params.p = static_cast<unsigned>(config.p);
    params.epsilon = cell.epsilon;
    params.scale_c = config.scale_c;
    params.ell = config.ell;
    params.seed = row.seed;
    params.t_override = config.t_override;
    params.engine = parse_engine(config.engine);
    const auto report = streaming_estimate(data.dataset, params);
    row.estimate = report.estimate;
    row.words = report.memory_words;
    row.rounds = 1;
  } else {
    DistParams params;
    params.p = config.p;
    params.epsilon = cell.epsilon;
    params.scale_c = config.scale_c;
    params.ell = config.ell;
    params.t_override = config.t_override;
    params.theta_override = config.theta_override;
    const auto protocol = parse_protocol(config.protocol);
    std::vector<double> estimates;
    for (std::size_t r = 0; r < config.median_runs; ++r) {
      const auto run_seed = config.median_runs == 1 ? row.seed : derive_seed(row.seed, StreamTag::kTrial, r);
      unsigned retries = 0;
      const auto report = protocol == Protocol::kAlg3
                              ? alg3_with_retries(data.dataset, *data.partition, params, run_seed,
                                                  config.max_retries, &retries)
                              : run_protocol(protocol, data.dataset, *data.partition, params, run_seed);
      row.retries += retries;
      row.words += report.total_words();
      row.rounds = std::max(row.rounds, report.rounds());
      if (report.failed) {
        row.failed = true;
        break;
      }
      estimates.push_back(*report.estimate);
    }
    if (!row.failed) row.estimate = median_boost(estimates);
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

std::string format_number(double value) {
  if (!std::isfinite(value)) throw InvariantViolation("non-finite value in output");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  json ds = {{"kind", c.dataset.kind},
             {"path", c.dataset.path},
             {"m", c.dataset.m},
             {"clique_size", c.dataset.clique_size},
             {"sizes", c.dataset.sizes},
             {"order", c.dataset.order},
             {"adversary_clique", c.dataset.adversary_clique}};
  return {{"version", c.version},
          {"mode", c.mode},
          {"protocol", c.protocol},
          {"engine", c.engine},
          {"dataset", ds},
          {"p", c.p},
          {"scale_c", c.scale_c},
          {"ell", c.ell},
          {"t_override", optional_json(c.t_override)},
          {"theta_override", optional_json(c.theta_override)},
          {"partition", c.partition},
          {"partition_file", c.partition_file},
          {"median_runs", c.median_runs},
          {"max_retries", c.max_retries},
          {"seed", c.seed},
          {"trials", c.trials},
          {"epsilons", c.epsilons},
          {"ks", c.ks},
          {"ms", c.ms},
          {"eta_targets", c.eta_targets}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"version", "mode", "protocol", "engine", "dataset", "p", "scale_c", "ell",
                  "t_override", "theta_override", "partition", "partition_file", "median_runs",
                  "max_retries", "seed", "trials", "epsilons", "ks", "ms", "eta_targets"},
                 "config");
  ExperimentConfig c;
  c.version = read_field(j, "version", c.version);
  c.mode = read_field(j, "mode", c.mode);
  c.protocol = read_field(j, "protocol", c.protocol);
  c.engine = read_field(j, "engine", c.engine);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, {"kind", "path", "m", "clique_size", "sizes", "order", "adversary_clique"},
                   "dataset");
    c.dataset.kind = read_field(d, "kind", c.dataset.kind);
    c.dataset.path = read_field(d, "path", c.dataset.path);
    c.dataset.m = read_field(d, "m", c.dataset.m);
    c.dataset.clique_size = read_field(d, "clique_size", c.dataset.clique_size);
    c.dataset.sizes = read_field(d, "sizes", c.dataset.sizes);
    c.dataset.order = read_field(d, "order", c.dataset.order);
    c.dataset.adversary_clique = read_field(d, "adversary_clique", c.dataset.adversary_clique);
  }
  c.p = read_field(j, "p", c.p);
  c.scale_c = read_field(j, "scale_c", c.scale_c);
  c.ell = read_field(j, "ell", c.ell);
  c.t_override = read_optional<std::size_t>(j, "t_override");
  c.theta_override = read_optional<double>(j, "theta_override");
  c.partition = read_field(j, "partition", c.partition);
  c.partition_file = read_field(j, "partition_file", c.partition_file);
  c.median_runs = read_field(j, "median_runs", c.median_runs);
  c.max_retries = read_field(j, "max_retries", c.max_retries);
  c.seed = read_field(j, "seed", c.seed);
  c.trials = read_field(j, "trials", c.trials);
  c.epsilons = read_field(j, "epsilons", c.epsilons);
  c.ks = read_field(j, "ks", c.ks);
  c.ms = read_field(j, "ms", c.ms);
  c.eta_targets = read_field(j, "eta_targets", c.eta_targets);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

double bound_constant(const ExperimentConfig& config) {
  if (config.mode == "dist" && config.protocol != "alg3") return 2;
  return 2 * std::tgamma(config.p + 1);
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& config) {
  validate(config);
  const double c_p = bound_constant(config);
  std::vector<ResultRow> rows;
  for (const auto& cell : expand_cells(config)) {
    const auto data = build_cell(config, cell);
    const auto truth = ground_truth(data.dataset, config.p);
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      auto row = run_trial(config, cell, data, trial);
      row.f_p = truth.f_p;
      row.eta = truth.eta;
      row.note = truth.note;
      if (row.estimate && truth.f_p && *truth.f_p > 0) {
        row.rel_err = std::abs(*row.estimate - *truth.f_p) / *truth.f_p;
      }
      if (truth.eta) row.bound = cell.epsilon + c_p * *truth.eta;
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.cell, a.trial) < std::tie(b.cell, b.trial);
  });
  return rows;
}

nlohmann::json report_summary(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw ConfigError("no rows to summarize");
  std::map<std::size_t, std::vector<const ResultRow*>> by_cell;
  for (const auto& row : rows) by_cell[row.cell].push_back(&row);
  json cells = json::array();
  for (const auto& [cell, members] : by_cell) {
    const auto& first = *members.front();
    std::vector<double> errs;
    double words = 0;
    std::size_t failures = 0, within = 0;
    for (const auto* row : members) {
      if (row->rel_err) errs.push_back(*row->rel_err);
      words += static_cast<double>(row->words);
      failures += row->failed ? 1 : 0;
      within += row->within_bound() ? 1 : 0;
    }
    const auto n = static_cast<double>(members.size());
    json entry = {{"cell", cell},
                  {"m", first.m},
                  {"k", first.k},
                  {"p", first.p},
                  {"epsilon", first.epsilon},
                  {"eta_target", optional_json(first.eta_target)},
                  {"eta_p", optional_json(first.eta)},
                  {"bound", optional_json(first.bound)},
                  {"trials", members.size()},
                  {"failures", failures},
                  {"mean_words", words / n}};
    if (errs.empty()) {
      entry["mean_rel_err"] = nullptr;
      entry["median_rel_err"] = nullptr;
      entry["p95_rel_err"] = nullptr;
      entry["success_rate"] = nullptr;
    } else {
      double sum = 0;
      for (double e : errs) sum += e;
      entry["mean_rel_err"] = sum / static_cast<double>(errs.size());
      entry["median_rel_err"] = percentile(errs, 0.5);
      entry["p95_rel_err"] = percentile(errs, 0.95);
      entry["success_rate"] = first.bound ? json(static_cast<double>(within) / n) : json(nullptr);
    }
    cells.push_back(std::move(entry));
  }
  return {{"cells", cells}};
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "# noisyfp-results v1\n"
      << "cell,trial,seed,m,k,p,epsilon,eta_target,estimate,f_p,rel_err,eta_p,bound,words,rounds,"
         "retries,failed,within_bound\n";
  for (const auto& r : rows) {
    out << r.cell << ',' << r.trial << ',' << r.seed << ',' << r.m << ',' << r.k << ','
        << format_number(r.p) << ',' << format_number(r.epsilon) << ',' << csv_optional(r.eta_target)
        << ',' << csv_optional(r.estimate) << ',' << csv_optional(r.f_p) << ','
        << csv_optional(r.rel_err) << ',' << csv_optional(r.eta) << ',' << csv_optional(r.bound) << ','
        << r.words << ',' << r.rounds << ',' << r.retries << ',' << (r.failed ? 1 : 0) << ','
        << (r.within_bound() ? 1 : 0) << '\n';
  }
}

void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"cell", r.cell},
                   {"trial", r.trial},
                   {"seed", r.seed},
                   {"m", r.m},
                   {"k", r.k},
                   {"p", r.p},
                   {"epsilon", r.epsilon},
                   {"eta_target", optional_json(r.eta_target)},
                   {"estimate", optional_json(r.estimate)},
                   {"f_p", optional_json(r.f_p)},
                   {"rel_err", optional_json(r.rel_err)},
                   {"eta_p", optional_json(r.eta)},
                   {"bound", optional_json(r.bound)},
                   {"words", r.words},
                   {"rounds", r.rounds},
                   {"retries", r.retries},
                   {"failed", r.failed},
                   {"within_bound", r.within_bound()},
                   {"note", r.note}});
  }
  out << json{{"schema", "noisyfp-results v1"}, {"rows", arr}}.dump(2) << '\n';
}

void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "cell,trial,wall_seconds\n";
  for (const auto& r : rows) out << r.cell << ',' << r.trial << ',' << format_number(r.wall_seconds) << '\n';
}

void write_sweep_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                         const std::vector<ResultRow>& rows, const std::string& format) {
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  std::filesystem::create_directories(dir);
  save_config(dir / "config.json", config);
  {
    std::ofstream out(dir / ("results." + format));
    if (format == "csv") {
      write_results_csv(out, rows);
    } else {
      write_results_json(out, rows);
    }
  }
  std::ofstream(dir / "summary.json") << report_summary(rows).dump(2) << '\n';
  std::ofstream timings(dir / "timings.csv");
  write_timings_csv(timings, rows);
}

}  // namespace noisyfp
