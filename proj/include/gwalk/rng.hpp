#pragma once

// Reproducible random streams.
//
// Every simulated path owns a std::mt19937_64, whose output sequence is
// fixed by the standard. Its seed is splitmix64(master ^ splitmix64(path)),
// so path p of master seed s is the same stream on every platform and does
// not depend on how paths are distributed over threads. Uniform variates
// take the top 53 bits of one engine output; std::uniform_real_distribution
// is avoided because its algorithm is implementation-defined.

#include <cstdint>
#include <random>

namespace gwalk {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t path) noexcept {
  return splitmix64(master ^ splitmix64(path));
}

inline Engine path_engine(std::uint64_t master, std::uint64_t path) {
  return Engine(derive_seed(master, path));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace gwalk
