#pragma once

#include <cstdint>
#include <limits>

namespace noisyfp {

/// Finalizer of SplitMix64; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of an independent sub-stream, keyed by (master, stream tag, index).
/// Every randomized component derives its generators this way so results do
/// not depend on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(master ^ 0x6a09e667f3bcc909ULL) + mix64(stream + 0x3c6ef372fe94f82bULL) +
               0x9e3779b97f4a7c15ULL * (index + 1));
}

/// Stream tags for derive_seed.
enum class StreamTag : std::uint64_t {
  kSampler = 1,
  kSite = 2,
  kCoordinator = 3,
  kGenerator = 4,
  kTrial = 5,
  kPartition = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                    std::uint64_t index = 0) {
  return derive_seed(master, static_cast<std::uint64_t>(tag), index);
}

/// SplitMix64: one word of state, satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  constexpr std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Uniform double in (0, 1] with 53 random bits.
template <class Rng>
double uniform_open_closed(Rng& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Uniform double in [0, 1).
template <class Rng>
double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift with
/// rejection, so the result is exactly uniform and platform independent.
__extension__ using uint128 = unsigned __int128;

template <class Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  uint128 product = static_cast<uint128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<uint128>(rng()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

}  // namespace noisyfp
