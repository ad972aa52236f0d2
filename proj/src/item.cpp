#include "noisyfp/item.hpp"

#include <algorithm>
#include <string>

#include "noisyfp/error.hpp"

namespace noisyfp {

IntSet::IntSet(std::vector<std::int64_t> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
}

std::size_t IntSet::intersection_size(const IntSet& other,
                                      std::size_t stop_at) const {
  const auto& a = values_;
  const auto& b = other.values_;
  if (a.empty() || b.empty() || a.back() < b.front() || b.back() < a.front()) {
    return 0;
  }
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      if (++count >= stop_at) return count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

Triple::Triple(std::int64_t a, std::int64_t b, std::int64_t c)
    : word_(static_cast<std::uint64_t>(pack_triple(a, b, c))) {}

Triple Triple::from_packed(std::uint64_t word) {
  Triple t;
  t.word_ = word;
  return t;
}

std::int64_t pack_triple(std::int64_t a, std::int64_t b, std::int64_t c) {
  if (a < 0 || a > Triple::kMaxA || b < 0 || b > Triple::kMaxB || c < 0 ||
      c > Triple::kMaxC) {
    throw ConfigError("triple component out of range for 20/20/24-bit packing: (" +
                      std::to_string(a) + ", " + std::to_string(b) + ", " +
                      std::to_string(c) + ")");
  }
  const auto word = (static_cast<std::uint64_t>(a) << (Triple::kBitsB + Triple::kBitsC)) |
                    (static_cast<std::uint64_t>(b) << Triple::kBitsC) |
                    static_cast<std::uint64_t>(c);
  return static_cast<std::int64_t>(word);
}

}  // namespace noisyfp
