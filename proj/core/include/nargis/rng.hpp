#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nargis {

using Rng = std::mt19937_64;

// splitmix64, the usual seed expander for mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the tag bytes; stable across runs and platforms, unlike
// std::hash, so derived streams are reproducible.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

// Independent child stream for a named sub-task of a seeded run.
inline Rng derive_rng(std::uint64_t seed, std::string_view tag) {
  return Rng(splitmix64(seed ^ fnv1a(tag)));
}

}  // namespace nargis
