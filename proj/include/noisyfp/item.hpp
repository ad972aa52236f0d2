#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <variant>
#include <vector>

namespace noisyfp {

/// 1-based position of an item in a dataset or stream.
using NodeIndex = std::size_t;

/// Sorted, duplicate-free set of 64-bit integers.
class IntSet {
 public:
  IntSet() = default;
  explicit IntSet(std::vector<std::int64_t> values);
  IntSet(std::initializer_list<std::int64_t> values)
      : IntSet(std::vector<std::int64_t>(values)) {}

  std::span<const std::int64_t> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  /// |*this ∩ other|, stopping early once `stop_at` common values are found.
  std::size_t intersection_size(const IntSet& other,
                                std::size_t stop_at = SIZE_MAX) const;

  friend bool operator==(const IntSet&, const IntSet&) = default;

 private:
  std::vector<std::int64_t> values_;
};

/// Three small non-negative integers packed into a single 64-bit word.
///
/// Layout (most significant first): a in 20 bits, b in 20 bits, c in 24 bits.
/// Construction throws ConfigError when a component does not fit.
class Triple {
 public:
  static constexpr int kBitsA = 20;
  static constexpr int kBitsB = 20;
  static constexpr int kBitsC = 24;
  static constexpr std::int64_t kMaxA = (std::int64_t{1} << kBitsA) - 1;
  static constexpr std::int64_t kMaxB = (std::int64_t{1} << kBitsB) - 1;
  static constexpr std::int64_t kMaxC = (std::int64_t{1} << kBitsC) - 1;

  Triple(std::int64_t a, std::int64_t b, std::int64_t c);

  static Triple from_packed(std::uint64_t word);

  std::int64_t a() const { return static_cast<std::int64_t>(word_ >> (kBitsB + kBitsC)); }
  std::int64_t b() const { return static_cast<std::int64_t>((word_ >> kBitsC) & kMaxB); }
  std::int64_t c() const { return static_cast<std::int64_t>(word_ & kMaxC); }
  std::uint64_t packed() const { return word_; }

  friend bool operator==(const Triple&, const Triple&) = default;

 private:
  Triple() = default;
  std::uint64_t word_ = 0;
};

/// Packs (a, b, c) with the Triple layout; used for set elements as well.
std::int64_t pack_triple(std::int64_t a, std::int64_t b, std::int64_t c);

/// An opaque identifier; similarity is decided by comparing identifiers.
struct Labeled {
  std::int64_t id = 0;
  friend bool operator==(const Labeled&, const Labeled&) = default;
};

/// One observed datum. Exactly one payload variant is present.
class Item {
 public:
  using Payload = std::variant<IntSet, Triple, Labeled>;

  Item(IntSet s) : payload_(std::move(s)) {}
  Item(Triple t) : payload_(t) {}
  Item(Labeled l) : payload_(l) {}

  const Payload& payload() const { return payload_; }

  template <class T>
  const T* get_if() const { return std::get_if<T>(&payload_); }

  friend bool operator==(const Item&, const Item&) = default;

 private:
  Payload payload_;
};

}  // namespace noisyfp
