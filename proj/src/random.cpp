#include "bstable/random.hpp"

namespace bstable {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
}

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

}  // namespace bstable
