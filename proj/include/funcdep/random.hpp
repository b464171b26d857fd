#pragma once

// Keyed random streams. Every random draw in the library comes from an engine
// seeded by hashing (seed, path...), so a draw depends only on its logical
// position and never on thread scheduling.

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace funcdep {

/// Stream identifiers used as the second key component.
enum class StreamId : std::uint64_t {
  Generation = 1,
  Permutation = 2,
  TieBreak = 3,
  Baseline = 4,
  Pair = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = splitmix64(seed);
  for (std::uint64_t p : path) key = splitmix64(key ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return key;
}

inline std::uint64_t derive_key(std::uint64_t seed, StreamId stream,
                                std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t key = derive_key(seed, {static_cast<std::uint64_t>(stream)});
  for (std::uint64_t p : path) key = splitmix64(key ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return key;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t key) {
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return Engine(seq);
}

inline Engine make_engine(std::uint64_t seed, StreamId stream,
                          std::initializer_list<std::uint64_t> path = {}) {
  return make_engine(derive_key(seed, stream, path));
}

/// Uniform draw from S(n) with the identity excluded (n >= 2).
inline std::vector<std::size_t> random_non_identity_permutation(std::size_t n, Engine& engine) {
  std::vector<std::size_t> perm(n);
  for (;;) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(perm[i - 1], perm[pick(engine)]);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (perm[i] != i) return perm;
  }
}

}  // namespace funcdep
