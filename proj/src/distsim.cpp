#include "noisyfp/distsim.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "noisyfp/error.hpp"

namespace noisyfp {

PartitionScheme parse_partition_scheme(const std::string& name) {
  if (name == "round-robin") return PartitionScheme::kRoundRobin;
  if (name == "contiguous") return PartitionScheme::kContiguous;
  if (name == "hash") return PartitionScheme::kHash;
  if (name == "file" || name == "explicit") return PartitionScheme::kExplicit;
  throw ConfigError("unknown partition scheme '" + name + "'");
}

std::string to_string(PartitionScheme scheme) {
  switch (scheme) {
    case PartitionScheme::kRoundRobin:
      return "round-robin";
    case PartitionScheme::kContiguous:
      return "contiguous";
    case PartitionScheme::kHash:
      return "hash";
    case PartitionScheme::kExplicit:
      return "file";
  }
  return "?";
}

SitePartition::SitePartition(std::size_t k, std::vector<std::size_t> site_of)
    : site_of_(std::move(site_of)), sites_(k) {
  if (k == 0) throw ConfigError("k must be at least 1");
  for (std::size_t i = 0; i < site_of_.size(); ++i) {
    if (site_of_[i] >= k) {
      throw ConfigError("node " + std::to_string(i + 1) + " assigned to site " +
                        std::to_string(site_of_[i]) + " outside [0, k)");
    }
    sites_[site_of_[i]].push_back(i + 1);
  }
}

SitePartition partition_dataset(std::size_t m, std::size_t k, PartitionScheme scheme,
                                std::uint64_t seed) {
  if (k == 0) throw ConfigError("k must be at least 1");
  std::vector<std::size_t> site_of(m);
  switch (scheme) {
    case PartitionScheme::kRoundRobin:
      for (std::size_t i = 0; i < m; ++i) site_of[i] = i % k;
      break;
    case PartitionScheme::kContiguous:
      for (std::size_t i = 0; i < m; ++i) site_of[i] = i * k / m;
      break;
    case PartitionScheme::kHash: {
      for (std::size_t i = 0; i < m; ++i) {
        SplitMix64 rng(derive_seed(seed, StreamTag::kPartition, i));
        site_of[i] = uniform_below(rng, k);
      }
      break;
    }
    case PartitionScheme::kExplicit:
      throw ConfigError("an explicit partition must be read from a map file");
  }
  return SitePartition(k, std::move(site_of));
}

void write_partition_csv(std::ostream& out, const SitePartition& partition) {
  out << "node,site\n";
  for (NodeIndex i = 1; i <= partition.m(); ++i) out << i << ',' << partition.site_of(i) << '\n';
}

SitePartition read_partition_csv(std::istream& in, std::size_t m, std::size_t k) {
  std::string line;
  if (!std::getline(in, line) || line != "node,site") {
    throw ConfigError("partition map must start with the header 'node,site'");
  }
  std::vector<std::size_t> site_of(m, k);
  std::size_t seen = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    long long node = 0, site = 0;
    char comma = 0;
    if (!(row >> node >> comma >> site) || comma != ',' || !row.eof()) {
      throw ConfigError("malformed partition row at line " + std::to_string(line_no));
    }
    if (node < 1 || static_cast<std::size_t>(node) > m) {
      throw ConfigError("partition node " + std::to_string(node) + " outside 1.." + std::to_string(m));
    }
    if (site < 0 || static_cast<std::size_t>(site) >= k) {
      throw ConfigError("partition site " + std::to_string(site) + " outside [0, k)");
    }
    if (site_of[node - 1] != k) throw ConfigError("node " + std::to_string(node) + " assigned twice");
    site_of[node - 1] = static_cast<std::size_t>(site);
    ++seen;
  }
  if (seen != m) throw ConfigError("partition map does not cover every node");
  return SitePartition(k, std::move(site_of));
}

void RoundLog::record(SimMessage message) {
  if (message.payload_words != message.payload.words()) {
    throw InvariantViolation("message word count disagrees with its payload");
  }
  if (!message.payload.items.empty() && message.payload.items.size() != message.payload.nodes.size()) {
    throw InvariantViolation("items must travel one per node reference");
  }
  total_words_ += message.payload_words;
  rounds_used_ = std::max(rounds_used_, message.round);
  messages_.push_back(std::move(message));
}

std::vector<std::uint64_t> RoundLog::words_per_site() const {
  std::vector<std::uint64_t> out(k_, 0);
  for (const auto& msg : messages_) {
    if (msg.from != kCoordinator) out.at(msg.from) += msg.payload_words;
    if (msg.to != kCoordinator) out.at(msg.to) += msg.payload_words;
  }
  return out;
}

void RoundLog::write_csv(std::ostream& out) const {
  auto party = [](int id) { return id == kCoordinator ? std::string("C") : std::to_string(id); };
  out << "round,from,to,words\n";
  for (const auto& msg : messages_) {
    out << msg.round << ',' << party(msg.from) << ',' << party(msg.to) << ',' << msg.payload_words
        << '\n';
  }
}

std::string RoundLog::summary_json() const {
  nlohmann::json j;
  j["total_words"] = total_words_;
  j["rounds"] = rounds_used_;
  j["per_site_words"] = words_per_site();
  return j.dump();
}

Site::Site(const Dataset& ds, std::size_t index, std::span<const NodeIndex> nodes,
           std::uint64_t seed)
    : ds_(ds), index_(index), nodes_(nodes), rng_(seed) {}

const Item& Site::item(NodeIndex i) const {
  if (!std::binary_search(nodes_.begin(), nodes_.end(), i)) {
    throw InvariantViolation("site " + std::to_string(index_) + " read foreign node " +
                             std::to_string(i));
  }
  return ds_.item(i);
}

std::uint64_t Site::degree_of(NodeIndex i, const Item& x) const {
  std::uint64_t d = 0;
  for (auto own : nodes_) d += ds_.oracle().similar(i, x, own, ds_.item(own)) ? 1 : 0;
  return d;
}

const std::vector<std::uint64_t>& Site::local_degrees() const {
  if (!local_degrees_) {
    std::vector<std::uint64_t> d(nodes_.size(), 1);
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes_.size(); ++b) {
        if (ds_.oracle().similar(nodes_[a], ds_.item(nodes_[a]), nodes_[b], ds_.item(nodes_[b]))) {
          ++d[a];
          ++d[b];
        }
      }
    }
    local_degrees_ = std::move(d);
  }
  return *local_degrees_;
}

CoordinatorSim::CoordinatorSim(const Dataset& ds, const SitePartition& partition,
                               std::uint64_t seed)
    : m_(ds.size()),
      coordinator_rng_(derive_seed(seed, StreamTag::kCoordinator)),
      log_(partition.k()) {
  if (partition.m() != ds.size()) {
    throw ConfigError("partition covers " + std::to_string(partition.m()) + " nodes, dataset has " +
                      std::to_string(ds.size()));
  }
  sites_.reserve(partition.k());
  for (std::size_t s = 0; s < partition.k(); ++s) {
    sites_.emplace_back(ds, s, partition.nodes(s), derive_seed(seed, StreamTag::kSite, s));
  }
}

unsigned CoordinatorSim::begin_round() { return ++round_; }

Payload CoordinatorSim::send(int from, int to, Payload payload) {
  if (round_ == 0) throw InvariantViolation("send before the first round");
  if ((from == kCoordinator) == (to == kCoordinator)) {
    throw InvariantViolation("messages run between the coordinator and one site");
  }
  const auto words = payload.words();
  log_.record({round_, from, to, words, std::move(payload)});
  return log_.messages().back().payload;
}

}  // namespace noisyfp
