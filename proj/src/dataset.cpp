#include "noisyfp/dataset.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "noisyfp/error.hpp"

namespace noisyfp {

Dataset::Dataset(std::vector<Item> items, SimilarityOracle oracle,
                 std::optional<std::vector<std::int64_t>> labels,
                 std::optional<std::vector<ItemTag>> tags)
    : items_(std::move(items)),
      oracle_(std::move(oracle)),
      labels_(std::move(labels)),
      tags_(std::move(tags)) {
  if (labels_ && labels_->size() != items_.size()) {
    throw ConfigError("ground-truth labeling has " + std::to_string(labels_->size()) +
                      " entries for " + std::to_string(items_.size()) + " items");
  }
  if (tags_ && tags_->size() != items_.size()) {
    throw ConfigError("item tags do not match the number of items");
  }
  if (const auto* lf = std::get_if<LabelWithFlips>(&oracle_.kind())) {
    for (const auto& [i, j] : lf->flips.pairs()) {
      if (j > items_.size()) {
        throw ConfigError("flip pair (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") outside 1.." +
                          std::to_string(items_.size()));
      }
    }
  }
}

void Dataset::check_index(NodeIndex i) const {
  if (i < 1 || i > items_.size()) {
    throw ConfigError("node index " + std::to_string(i) + " outside 1.." +
                      std::to_string(items_.size()));
  }
}

const Item& Dataset::item(NodeIndex i) const {
  check_index(i);
  return items_[i - 1];
}

std::span<const std::int64_t> Dataset::labels() const {
  if (!labels_) throw MissingGroundTruth();
  return *labels_;
}

std::int64_t Dataset::label(NodeIndex i) const {
  check_index(i);
  return labels()[i - 1];
}

std::span<const ItemTag> Dataset::tags() const {
  if (!tags_) throw ConfigError("dataset carries no item tags");
  return *tags_;
}

bool Dataset::similar(NodeIndex i, NodeIndex j) const {
  check_index(i);
  check_index(j);
  return oracle_.similar(i, items_[i - 1], j, items_[j - 1]);
}

bool Dataset::similar(NodeIndex i, NodeIndex j, Relation relation) const {
  if (relation == Relation::kObserved) return similar(i, j);
  return label(i) == label(j);
}

NeighborhoodView neighborhood(const Dataset& ds, NodeIndex i, Relation relation) {
  NeighborhoodView view{i, {}};
  for (NodeIndex j = 1; j <= ds.size(); ++j) {
    if (ds.similar(i, j, relation)) view.members.push_back(j);
  }
  return view;
}

std::uint64_t mult(std::span<const NodeIndex> indices) {
  if (indices.empty()) throw ConfigError("mult of an empty index sequence");
  if (indices.size() > 20) throw ConfigError("mult supports at most 20 indices");
  std::map<NodeIndex, std::uint64_t> counts;
  for (auto i : indices) ++counts[i];
  // Multiply in binomial steps so intermediates stay exact.
  std::uint64_t result = 1;
  std::uint64_t placed = 0;
  for (const auto& [node, c] : counts) {
    for (std::uint64_t r = 1; r <= c; ++r) {
      ++placed;
      result = result * placed / r;
    }
  }
  return result;
}

std::size_t tail_size(const Dataset& ds, std::span<const NodeIndex> clique) {
  if (clique.empty()) throw ConfigError("tail set of an empty clique");
  for (std::size_t a = 0; a < clique.size(); ++a) {
    if (a > 0 && clique[a] < clique[a - 1]) {
      throw ConfigError("tail set requires non-decreasing indices");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (!ds.similar(clique[a], clique[b])) {
        throw ConfigError("tail set requires a clique");
      }
    }
  }
  std::size_t count = 0;
  for (NodeIndex i = clique.back(); i <= ds.size(); ++i) {
    bool all = true;
    for (auto k : clique) {
      if (!ds.similar(i, k)) {
        all = false;
        break;
      }
    }
    if (all) ++count;
  }
  return count;
}

}  // namespace noisyfp
