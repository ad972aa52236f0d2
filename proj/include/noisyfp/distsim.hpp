#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisyfp/dataset.hpp"
#include "noisyfp/rng.hpp"

namespace noisyfp {

/// Sender/receiver id of the coordinator; sites are 0..k-1.
inline constexpr int kCoordinator = -1;

enum class PartitionScheme { kRoundRobin, kContiguous, kHash, kExplicit };

PartitionScheme parse_partition_scheme(const std::string& name);
std::string to_string(PartitionScheme scheme);

/// Assignment of the nodes 1..m to k sites. Sites may be empty.
class SitePartition {
 public:
  /// site_of[i-1] is the site of node i. Throws ConfigError unless every
  /// entry is in [0, k).
  SitePartition(std::size_t k, std::vector<std::size_t> site_of);

  std::size_t k() const { return sites_.size(); }
  std::size_t m() const { return site_of_.size(); }
  std::size_t site_of(NodeIndex i) const { return site_of_.at(i - 1); }
  /// V^(κ), ascending.
  std::span<const NodeIndex> nodes(std::size_t site) const { return sites_.at(site); }
  std::span<const std::size_t> assignment() const { return site_of_; }

 private:
  std::vector<std::size_t> site_of_;
  std::vector<std::vector<NodeIndex>> sites_;
};

/// Round-robin puts node i at site (i-1) mod k; contiguous gives consecutive
/// blocks of near-equal size; hash draws each site from the seed.
SitePartition partition_dataset(std::size_t m, std::size_t k, PartitionScheme scheme,
                                std::uint64_t seed = 0);

/// CSV with header "node,site"; nodes 1-based, sites 0-based. Every node of
/// 1..m must appear exactly once.
void write_partition_csv(std::ostream& out, const SitePartition& partition);
SitePartition read_partition_csv(std::istream& in, std::size_t m, std::size_t k);

/// Message contents. A node reference travels with its item and the pair is
/// charged one word; counts and reals are one word each.
struct Payload {
  std::vector<NodeIndex> nodes;
  std::vector<Item> items;  // parallel to `nodes`, or empty
  std::vector<std::uint64_t> counts;
  std::vector<double> reals;

  std::uint64_t words() const { return nodes.size() + counts.size() + reals.size(); }
};

struct SimMessage {
  unsigned round = 0;
  int from = kCoordinator;
  int to = kCoordinator;
  std::uint64_t payload_words = 0;
  Payload payload;
};

class RoundLog {
 public:
  explicit RoundLog(std::size_t k = 0) : k_(k) {}

  void record(SimMessage message);

  std::span<const SimMessage> messages() const { return messages_; }
  std::uint64_t total_words() const { return total_words_; }
  /// Words sent or received by each site.
  std::vector<std::uint64_t> words_per_site() const;
  /// Highest round number that carried a message.
  unsigned rounds_used() const { return rounds_used_; }

  /// Columns round,from,to,words; the coordinator is written as "C".
  void write_csv(std::ostream& out) const;
  /// {"per_site_words":[...],"rounds":r,"total_words":w}
  std::string summary_json() const;

 private:
  std::size_t k_;
  std::vector<SimMessage> messages_;
  std::uint64_t total_words_ = 0;
  unsigned rounds_used_ = 0;
};

/// One site's view: its own items, a private random stream, and nothing
/// else. Items of other sites reach it only inside messages.
class Site {
 public:
  Site(const Dataset& ds, std::size_t index, std::span<const NodeIndex> nodes, std::uint64_t seed);

  std::size_t index() const { return index_; }
  std::span<const NodeIndex> nodes() const { return nodes_; }
  /// Item of an own node; throws InvariantViolation for foreign nodes.
  const Item& item(NodeIndex i) const;
  /// Number of own nodes similar to node i carrying item x.
  std::uint64_t degree_of(NodeIndex i, const Item& x) const;
  /// d_local of every own node, in the order of nodes().
  const std::vector<std::uint64_t>& local_degrees() const;
  SplitMix64& rng() { return rng_; }

 private:
  const Dataset& ds_;
  std::size_t index_;
  std::span<const NodeIndex> nodes_;
  SplitMix64 rng_;
  mutable std::optional<std::vector<std::uint64_t>> local_degrees_;
};

/// Star network of k sites and a coordinator with synchronous rounds. All
/// traffic goes through send(), which logs it.
class CoordinatorSim {
 public:
  CoordinatorSim(const Dataset& ds, const SitePartition& partition, std::uint64_t seed);

  std::size_t k() const { return sites_.size(); }
  std::size_t m() const { return m_; }
  Site& site(std::size_t index) { return sites_.at(index); }
  SplitMix64& coordinator_rng() { return coordinator_rng_; }

  /// Starts the next round; returns its number (1-based).
  unsigned begin_round();
  unsigned round() const { return round_; }
  /// Logs the message and returns the payload as delivered.
  Payload send(int from, int to, Payload payload);

  const RoundLog& log() const { return log_; }
  RoundLog take_log() { return std::move(log_); }

 private:
  std::size_t m_;
  std::vector<Site> sites_;
  SplitMix64 coordinator_rng_;
  unsigned round_ = 0;
  RoundLog log_;
};

}  // namespace noisyfp
