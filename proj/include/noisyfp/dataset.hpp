#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noisyfp/item.hpp"
#include "noisyfp/oracle.hpp"

namespace noisyfp {

/// Which graph to read: the observed similarity graph or the ground-truth
/// cluster graph.
enum class Relation { kObserved, kGroundTruth };

/// Provenance of an item produced by a DISJ reduction: item q_{element,slot}
/// created by `player`.
struct ItemTag {
  std::int64_t element = 0;
  std::int64_t player = 0;
  std::int64_t slot = 0;
  friend bool operator==(const ItemTag&, const ItemTag&) = default;
};

/// An immutable noisy dataset: items indexed 1..m, the similarity oracle
/// that relates them and, optionally, the ground-truth element of every item.
class Dataset {
 public:
  Dataset(std::vector<Item> items, SimilarityOracle oracle,
          std::optional<std::vector<std::int64_t>> labels = std::nullopt,
          std::optional<std::vector<ItemTag>> tags = std::nullopt);

  std::size_t size() const { return items_.size(); }
  const Item& item(NodeIndex i) const;
  std::span<const Item> items() const { return items_; }
  const SimilarityOracle& oracle() const { return oracle_; }

  bool has_ground_truth() const { return labels_.has_value(); }
  /// Throws MissingGroundTruth.
  std::span<const std::int64_t> labels() const;
  std::int64_t label(NodeIndex i) const;

  bool has_tags() const { return tags_.has_value(); }
  std::span<const ItemTag> tags() const;

  /// Observed similarity sim(i, j). Pure; throws ConfigError on bad indices.
  bool similar(NodeIndex i, NodeIndex j) const;
  bool similar(NodeIndex i, NodeIndex j, Relation relation) const;

 private:
  void check_index(NodeIndex i) const;

  std::vector<Item> items_;
  SimilarityOracle oracle_;
  std::optional<std::vector<std::int64_t>> labels_;
  std::optional<std::vector<ItemTag>> tags_;
};

/// B_i and d_i = |B_i| for one node.
struct NeighborhoodView {
  NodeIndex node = 0;
  std::vector<NodeIndex> members;  // ascending, always contains `node`
  std::size_t degree() const { return members.size(); }
};

/// O(m) scan through the oracle; no adjacency is cached.
NeighborhoodView neighborhood(const Dataset& ds, NodeIndex i,
                              Relation relation = Relation::kObserved);

/// Number of distinct orderings of the multiset of indices: p! / prod c_k!.
std::uint64_t mult(std::span<const NodeIndex> indices);

/// |{i >= i_j : i similar to every i_1..i_j}| for an increasingly ordered
/// j-clique. Throws ConfigError when the input is not such a clique.
std::size_t tail_size(const Dataset& ds, std::span<const NodeIndex> clique);

}  // namespace noisyfp
