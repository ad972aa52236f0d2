#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace noisyfp {

/// Where the dataset of each sweep cell comes from.
struct DatasetSpec {
  std::string kind = "cluster";  // cluster | file | kpartite
  std::string path;              // file
  std::size_t m = 2000;          // used when the sweep has no m axis
  std::size_t clique_size = 100;  // cluster: m / clique_size cliques (plus a remainder)
  std::vector<std::size_t> sizes;  // cluster: explicit sizes, only without an m axis
  std::string order = "grouped";
  std::size_t adversary_clique = 32;  // kpartite
};

/// A complete, serializable description of a sweep. Cells are the Cartesian
/// product ms x eta_targets x epsilons x ks; every cell runs `trials` trials.
struct ExperimentConfig {
  int version = 1;
  std::string mode = "stream";      // stream | dist
  std::string protocol = "alg4";    // dist: alg3 | alg4 | naive
  std::string engine = "deferred";  // stream: deferred | pooled | naive
  DatasetSpec dataset;
  double p = 2;
  double scale_c = 50;
  std::size_t ell = 20;
  std::optional<std::size_t> t_override;
  std::optional<double> theta_override;
  std::string partition = "round-robin";
  std::string partition_file;
  std::size_t median_runs = 1;
  unsigned max_retries = 3;
  std::uint64_t seed = 1;
  std::size_t trials = 10;
  std::vector<double> epsilons{0.25};
  std::vector<std::size_t> ks{4};
  std::vector<std::size_t> ms;  // empty: dataset.m (ignored for files)
  std::vector<double> eta_targets;  // empty: no injected noise
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Unknown keys and ill-typed values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

struct ResultRow {
  std::size_t cell = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t k = 0;
  double p = 2;
  double epsilon = 0;
  std::optional<double> eta_target;
  std::optional<double> estimate;  // empty when the protocol failed
  std::optional<double> f_p;
  std::optional<double> rel_err;
  std::optional<double> eta;
  std::optional<double> bound;  // ε + c_p·η
  std::uint64_t words = 0;      // memory words (stream) or ledger words (dist)
  unsigned rounds = 0;
  unsigned retries = 0;
  bool failed = false;
  std::string note;  // e.g. an exact-oracle error for the cell
  double wall_seconds = 0;

  bool within_bound() const { return !failed && rel_err && bound && *rel_err <= *bound; }
};

/// c_p of the accuracy bound: 2·p! for the streaming estimator and
/// Algorithm 3, 2 for Algorithm 4 and the naive baseline.
double bound_constant(const ExperimentConfig& config);

/// Runs every cell and trial; rows come back sorted by (cell, trial).
std::vector<ResultRow> run_sweep(const ExperimentConfig& config);

/// Per-cell mean/median/p95 relative error, success rate, mean words.
/// Throws ConfigError on empty input.
nlohmann::json report_summary(const std::vector<ResultRow>& rows);

/// First line is the schema comment "# noisyfp-results v1". No wall times.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows);
void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// Writes config.json, results.{csv,json}, summary.json and timings.csv.
void write_sweep_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                         const std::vector<ResultRow>& rows, const std::string& format = "csv");

/// Shortest round-trip decimal form of a finite double.
std::string format_number(double value);

}  // namespace noisyfp
