#include "judgekit/rng.hpp"

#include <numeric>

namespace judgekit::rng {

std::string to_hex(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t k,
                                        SplitMix64& gen) {
  std::vector<std::size_t> indices(population);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (k >= population) {
    shuffle(indices, gen);
    return indices;
  }
  // Partial Fisher-Yates: only the first k slots are settled.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(gen.next_below(population - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(k);
  return indices;
}

}  // namespace judgekit::rng
