#pragma once

#include <cstdint>
#include <random>

namespace bstable {

/// Engine used for every draw in the library.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood 2014). Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for replicate `index` of a run seeded with `seed`.
///
/// stream_i = splitmix64(splitmix64(seed) ^ splitmix64(index + golden)).
/// The mapping depends only on (seed, index), so results do not depend on
/// which worker thread executes a replicate.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Engine for replicate `index` of a run seeded with `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

/// Independent sub-run seeds for the different parts of one experiment.
/// Domains are small integers chosen by the caller.
inline std::uint64_t domain_seed(std::uint64_t seed, std::uint64_t domain) {
  return derive_seed(splitmix64(seed ^ 0xD1B54A32D192ED03ULL), domain);
}

}  // namespace bstable
