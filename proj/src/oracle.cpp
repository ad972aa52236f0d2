#include "noisyfp/oracle.hpp"

#include <algorithm>

#include "noisyfp/error.hpp"

namespace noisyfp {

FlipSet::FlipSet(std::vector<NodePair> pairs) {
  for (auto& [i, j] : pairs) {
    if (i == j) {
      throw ConfigError("flip set may not contain a self pair (" +
                        std::to_string(i) + ", " + std::to_string(i) + ")");
    }
    if (i == 0 || j == 0) throw ConfigError("flip pairs are 1-based");
    if (j < i) std::swap(i, j);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  pairs_ = std::move(pairs);
  lookup_.reserve(pairs_.size());
  for (const auto& [i, j] : pairs_) lookup_.insert(key(i, j));
}

std::uint64_t FlipSet::key(NodeIndex i, NodeIndex j) {
  if (j < i) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

bool FlipSet::contains(NodeIndex i, NodeIndex j) const {
  if (lookup_.empty() || i == j) return false;
  return lookup_.contains(key(i, j));
}

SimilarityOracle::SimilarityOracle(Kind kind) : kind_(std::move(kind)) {
  if (const auto* s = std::get_if<SetIntersection>(&kind_); s && s->threshold < 1) {
    throw ConfigError("set-intersection threshold must be positive");
  }
  if (const auto* t = std::get_if<TupleRule>(&kind_); t && t->modulus < 1) {
    throw ConfigError("tuple-rule modulus must be positive");
  }
}

SimilarityOracle SimilarityOracle::label_with_flips(FlipSet flips) {
  return SimilarityOracle(LabelWithFlips{std::move(flips)});
}

SimilarityOracle SimilarityOracle::set_intersection(std::int64_t threshold) {
  return SimilarityOracle(SetIntersection{threshold});
}

SimilarityOracle SimilarityOracle::tuple_rule(std::int64_t modulus) {
  return SimilarityOracle(TupleRule{modulus});
}

namespace {

template <class T>
const T& payload_as(const Item& item, const char* oracle_name) {
  const T* p = item.get_if<T>();
  if (p == nullptr) {
    throw ConfigError(std::string("item payload does not match the ") +
                      oracle_name + " oracle");
  }
  return *p;
}

}  // namespace

bool SimilarityOracle::similar(NodeIndex i, const Item& x, NodeIndex j,
                               const Item& y) const {
  if (i == j) return true;
  if (const auto* lf = std::get_if<LabelWithFlips>(&kind_)) {
    const bool same = payload_as<Labeled>(x, "label-with-flips").id ==
                      payload_as<Labeled>(y, "label-with-flips").id;
    return same != lf->flips.contains(i, j);
  }
  if (const auto* si = std::get_if<SetIntersection>(&kind_)) {
    const auto& sx = payload_as<IntSet>(x, "set-intersection");
    const auto& sy = payload_as<IntSet>(y, "set-intersection");
    const auto need = static_cast<std::size_t>(si->threshold);
    return sx.intersection_size(sy, need) >= need;
  }
  const auto& rule = std::get<TupleRule>(kind_);
  const auto& tx = payload_as<Triple>(x, "tuple-rule");
  const auto& ty = payload_as<Triple>(y, "tuple-rule");
  if (tx.a() != ty.a() || tx.b() != ty.b()) return false;
  if (tx.c() == ty.c()) return true;
  return tx.c() % rule.modulus != ty.c() % rule.modulus;
}

}  // namespace noisyfp
