#pragma once

// Deterministic hashing and random draws. Everything here is fixed
// arithmetic on uint64_t, so seeded results are reproducible across
// platforms and standard-library implementations (std::shuffle and the
// std distributions are not).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace judgekit::rng {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t avalanche(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

/// Combine two 64-bit values into one well-mixed value.
constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return avalanche(avalanche(a + kGolden) ^ b);
}

/// FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

/// splitmix64 generator: tiny state, fast seeding, good avalanche.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kGolden;
    return avalanche(state_);
  }

  /// Uniform double in [0, 1).
  constexpr double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  constexpr std::uint64_t next_below(std::uint64_t bound) {
    return next() % bound;
  }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle driven by a SplitMix64 stream.
template <typename T>
void shuffle(std::vector<T>& values, SplitMix64& gen) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(gen.next_below(i));
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

/// k distinct indices drawn uniformly from [0, population), in draw order.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t k,
                                        SplitMix64& gen);

}  // namespace judgekit::rng
