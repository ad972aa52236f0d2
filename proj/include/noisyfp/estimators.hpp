#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisyfp/dataset.hpp"
#include "noisyfp/distsim.hpp"
#include "noisyfp/rng.hpp"

namespace noisyfp {

enum class Protocol { kAlg3, kAlg4, kNaive };

Protocol parse_protocol(const std::string& name);
std::string to_string(Protocol protocol);

struct DistParams {
  double p = 2;
  double epsilon = 0.5;
  // Algorithm 3
  double scale_c = 1e6;
  std::size_t ell = 100;
  // Algorithm 4 (t is shared with Algorithm 3 when overridden)
  std::optional<std::size_t> t_override;
  std::optional<double> theta_override;
};

/// Result of one protocol run. `failed` marks Algorithm 3's FAIL outcome, in
/// which case `estimate` is empty.
struct EstimateReport {
  Protocol protocol = Protocol::kNaive;
  std::optional<double> estimate;
  bool failed = false;
  std::size_t t = 0;
  std::size_t ell = 0;
  double theta = 0;
  std::size_t sample_size = 0;      // |S′| for Algorithm 3, |S| for Algorithm 4
  std::size_t distinct_sampled = 0; // distinct nodes broadcast in the last round
  double max_summand = 0;           // Algorithm 4: largest truncated summand
  std::uint64_t seed = 0;
  RoundLog log;

  unsigned rounds() const { return log.rounds_used(); }
  std::uint64_t total_words() const { return log.total_words(); }
};

/// ceil(scale_c * m^{1-1/p} / ε²).
std::size_t alg3_t(std::size_t m, double p, double epsilon, double scale_c);
/// ceil(36 * 4^p * k^{p-1} / ε^{p+1}).
std::size_t alg4_t(std::size_t k, double p, double epsilon);
/// 2 * (4k/ε)^{p-1}.
double alg4_theta(std::size_t k, double p, double epsilon);

/// Two rounds. Sites Bernoulli-sample their nodes with probability
/// min(1, 2tℓ/m); the coordinator turns the union into tℓ i.i.d. uniform
/// nodes, collects their global degrees and returns the minimum over ℓ
/// groups of (m/t) Σ d_i^{p-1}. FAIL when fewer than tℓ nodes arrive.
EstimateReport alg3_general(const Dataset& ds, const SitePartition& partition,
                            const DistParams& params, std::uint64_t seed);

/// Maps a Bernoulli sample of [m] to `target` i.i.d. uniform draws from [m]:
/// draw J_1..J_target uniformly, then give each distinct J value its own
/// element of s_prime, chosen without replacement.
std::vector<NodeIndex> convert_sample(std::span<const NodeIndex> s_prime, std::size_t m,
                                      std::size_t target, SplitMix64& rng);

/// Three rounds: local degree moments, weighted node samples, global degrees
/// of the sampled nodes; returns the θ-truncated importance-weighted mean.
EstimateReport alg4_low_noise(const Dataset& ds, const SitePartition& partition,
                              const DistParams& params, std::uint64_t seed);

/// One round: D_local = Σ_i d_local_i^{p-1}.
EstimateReport naive_local_baseline(const Dataset& ds, const SitePartition& partition, double p);

/// Median of an odd, non-empty list.
double median_boost(std::span<const double> runs);

EstimateReport run_protocol(Protocol protocol, const Dataset& ds, const SitePartition& partition,
                            const DistParams& params, std::uint64_t seed);

/// Runs Algorithm 3 with derived seeds until it does not FAIL, at most
/// 1 + max_retries times. `retries` receives the number of extra attempts.
EstimateReport alg3_with_retries(const Dataset& ds, const SitePartition& partition,
                                 const DistParams& params, std::uint64_t seed,
                                 unsigned max_retries, unsigned* retries = nullptr);

}  // namespace noisyfp
