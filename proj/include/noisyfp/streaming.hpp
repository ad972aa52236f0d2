#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noisyfp/dataset.hpp"
#include "noisyfp/error.hpp"
#include "noisyfp/rng.hpp"

namespace noisyfp {

/// Sequential, read-once view of a dataset as a stream. Counts how many
/// items were handed out so callers can assert single-pass behaviour.
class DatasetStream {
 public:
  explicit DatasetStream(const Dataset& ds) : ds_(&ds) {}

  struct Element {
    NodeIndex index;
    const Item* item;
  };

  std::optional<Element> next() {
    if (position_ >= ds_->size()) return std::nullopt;
    ++position_;
    return Element{position_, &ds_->item(position_)};
  }

  /// The stream length m, known in advance.
  std::size_t length() const { return ds_->size(); }
  std::size_t consumed() const { return position_; }
  const SimilarityOracle& oracle() const { return ds_->oracle(); }

 private:
  const Dataset* ds_;
  std::size_t position_ = 0;
};

/// Counter value at which a reservoir that just accepted at `count` accepts
/// next, given u uniform in (0,1]. P(next > n) = count / n, the same law as
/// independent coins with probabilities 1/(count+1), 1/(count+2), ...
inline std::uint64_t next_acceptance(std::uint64_t count, double u) {
  const double skip = static_cast<double>(count) / u;
  if (!(skip < 0x1.0p62)) return std::uint64_t{1} << 62;
  return static_cast<std::uint64_t>(skip) + 1;
}

/// Nested reservoir sampler of one increasingly ordered p-clique.
///
/// Level 1 keeps a uniform item of the stream; level k keeps a uniform item
/// among those after i_{k-1} that are similar to a_1..a_{k-1}, and r_k counts
/// them. A replacement at level k resets r_{k+1}, and because a_k ~ item the
/// deeper levels are re-seeded in the same step. finish() returns
/// mult(i_1..i_p) * prod r_k, an unbiased estimate of |K_p|.
template <class Rng = SplitMix64>
class CliqueSampler {
 public:
  CliqueSampler(unsigned p, Rng rng)
      : p_(p), held_(p), idx_(p, 0), r_(p, 0), next_(p, 1), rng_(std::move(rng)) {
    if (p == 0) throw ConfigError("p must be a positive integer");
  }

  void step(const SimilarityOracle& oracle, const Item& item, NodeIndex j) {
    ++r_[0];
    if (r_[0] == next_[0]) replace(0, item, j);
    for (unsigned k = 1; k < p_; ++k) {
      if (idx_[k - 1] != j) {
        ++oracle_calls_;
        if (!oracle.similar(idx_[k - 1], *held_[k - 1], j, item)) break;
      }
      ++r_[k];
      if (r_[k] == next_[k]) replace(k, item, j);
    }
  }

  /// Throws ConfigError when no item has been processed.
  double finish() const {
    if (r_[0] == 0) throw ConfigError("no estimate exists for an empty stream");
    double product = static_cast<double>(mult(idx_));
    for (auto r : r_) product *= static_cast<double>(r);
    return product;
  }

  unsigned p() const { return p_; }
  std::span<const std::optional<Item>> held() const { return held_; }
  std::span<const NodeIndex> indices() const { return idx_; }
  std::span<const std::uint64_t> counters() const { return r_; }
  std::uint64_t oracle_calls() const { return oracle_calls_; }

 private:
  void replace(unsigned level, const Item& item, NodeIndex j) {
    held_[level] = item;
    idx_[level] = j;
    next_[level] = next_acceptance(r_[level], uniform_open_closed(rng_));
    if (level + 1 < p_) {
      r_[level + 1] = 0;
      next_[level + 1] = 1;
    }
  }

  unsigned p_;
  std::vector<std::optional<Item>> held_;
  std::vector<NodeIndex> idx_;
  std::vector<std::uint64_t> r_;
  std::vector<std::uint64_t> next_;
  Rng rng_;
  std::uint64_t oracle_calls_ = 0;
};

/// Seed of sampler number `sampler` under a master seed.
inline std::uint64_t sampler_seed(std::uint64_t master, std::uint64_t sampler) {
  return derive_seed(master, StreamTag::kSampler, sampler);
}

/// Runs `count` independent samplers (sampler s seeded with
/// sampler_seed(seed, s)) over one pass of the stream, one CliqueSampler per
/// instance. Reference engine: O(count * m) work.
std::vector<double> run_samplers_naive(DatasetStream& stream, unsigned p, std::size_t count,
                                       std::uint64_t seed);

struct PooledRunStats {
  std::uint64_t oracle_calls = 0;
  std::size_t peak_prefix_nodes = 0;
};

/// Same samplers, same random draws and bit-identical outputs as
/// run_samplers_naive, but samplers sharing a prefix (i_1..i_k) share the
/// counter r_{k+1}; one similarity test per live prefix per item replaces
/// one test per sampler.
std::vector<double> run_samplers_pooled(DatasetStream& stream, unsigned p, std::size_t count,
                                        std::uint64_t seed, PooledRunStats* stats = nullptr);

/// Pooled engine that does not simulate the last reservoir level item by
/// item. Once level p was last reset, its final pick is uniform over the r_p
/// items offered since, the first being i_{p-1} itself; one draw after the
/// stream ends yields the same joint law of (i, r). Outputs are equal in
/// distribution to run_samplers_naive, not bit-identical.
std::vector<double> run_samplers_deferred(DatasetStream& stream, unsigned p, std::size_t count,
                                          std::uint64_t seed, PooledRunStats* stats = nullptr);

enum class SamplerEngine { kPooled, kNaive, kDeferred };

struct StreamParams {
  unsigned p = 2;
  double epsilon = 0.1;
  double scale_c = 1e6;  // leading constant of t
  std::size_t ell = 100;  // number of groups
  std::uint64_t seed = 0;
  std::optional<std::size_t> t_override;
  SamplerEngine engine = SamplerEngine::kDeferred;
  std::size_t max_samplers = std::size_t{1} << 28;
};

struct StreamEstimateReport {
  double estimate = 0;
  std::size_t groups = 0;
  std::size_t per_group = 0;  // t
  std::vector<double> group_means;
  std::size_t samplers = 0;
  std::uint64_t memory_words = 0;
  std::uint64_t seed = 0;
};

/// t = ceil(scale_c * p! * m^{1-1/p} / eps^2).
std::size_t samplers_per_group(unsigned p, std::size_t m, double epsilon, double scale_c);

/// One-pass min-of-group-means estimate of F_p.
StreamEstimateReport streaming_estimate(const Dataset& ds, const StreamParams& params);

/// Minimum over consecutive groups of `per_group` values of the group mean.
double min_of_group_means(std::span<const double> values, std::size_t per_group,
                          std::vector<double>* means = nullptr);

}  // namespace noisyfp
