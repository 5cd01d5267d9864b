#pragma once

#include <cstdint>
#include <random>

namespace lhspline {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-task seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-task `index` of a computation seeded with `seed`. The stream
/// tag separates unrelated consumers (bootstrap, posterior draws, replicates)
/// that share the same user seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index) {
  return mix_seed(mix_seed(mix_seed(seed) ^ stream) + index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return Rng(derive_seed(seed, stream, index));
}

namespace streams {
inline constexpr std::uint64_t kBootstrap = 0xB007;
inline constexpr std::uint64_t kPosterior = 0xC0D5;
inline constexpr std::uint64_t kReplicate = 0x5EED;
inline constexpr std::uint64_t kSimulate = 0x51A1;
}  // namespace streams

}  // namespace lhspline
