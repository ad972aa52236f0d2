#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "noisyfp/item.hpp"

namespace noisyfp {

using NodePair = std::pair<NodeIndex, NodeIndex>;

/// Set of unordered node pairs whose similarity answer is inverted.
/// Stored normalized (first < second) and sorted; self pairs are rejected.
class FlipSet {
 public:
  FlipSet() = default;
  explicit FlipSet(std::vector<NodePair> pairs);

  bool contains(NodeIndex i, NodeIndex j) const;
  std::span<const NodePair> pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

 private:
  static std::uint64_t key(NodeIndex i, NodeIndex j);

  std::vector<NodePair> pairs_;
  std::unordered_set<std::uint64_t> lookup_;
};

/// sim(i,j) = (id_i == id_j) XOR ((i,j) in flips). Requires Labeled payloads.
struct LabelWithFlips {
  FlipSet flips;
};

/// sim(i,j) = |set_i ∩ set_j| >= threshold. Requires IntSet payloads.
struct SetIntersection {
  std::int64_t threshold = 1;
};

/// (a,b,c) ~ (a',b',c') iff a = a', b = b' and either c = c' or
/// c != c' (mod modulus). Requires Triple payloads.
struct TupleRule {
  std::int64_t modulus = 1;
};

/// Symmetric, reflexive boolean similarity over (index, item) pairs.
class SimilarityOracle {
 public:
  using Kind = std::variant<LabelWithFlips, SetIntersection, TupleRule>;

  explicit SimilarityOracle(Kind kind);

  static SimilarityOracle label_with_flips(FlipSet flips = {});
  static SimilarityOracle set_intersection(std::int64_t threshold = 1);
  static SimilarityOracle tuple_rule(std::int64_t modulus);

  const Kind& kind() const { return kind_; }

  /// Throws ConfigError when an item's payload does not match the oracle kind.
  bool similar(NodeIndex i, const Item& x, NodeIndex j, const Item& y) const;

 private:
  Kind kind_;
};

}  // namespace noisyfp
