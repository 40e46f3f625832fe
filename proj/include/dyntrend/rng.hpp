#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dyntrend {

/// splitmix64 finalizer; a bijection on 64-bit words with good avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for replicate `index` of a root seed. Depends only on the pair,
/// so parallel runs see the same generator regardless of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
  return mix64(root ^ mix64(index ^ 0x632BE59BD9B4E019ULL));
}

/// Maps 64 random bits to the open interval (0, 1).
constexpr double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based uniform: draw `counter` of `stream` under `key`.
constexpr double counter_uniform(std::uint64_t key, std::uint64_t stream,
                                 std::uint64_t counter) noexcept {
  return unit_open(mix64(mix64(key ^ mix64(stream)) + counter * 0xD1B54A32D192ED03ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine{mix64(seed)}; }

inline double uniform01(Engine& engine) { return unit_open(engine()); }

inline double exponential(Engine& engine, double rate) {
  return -std::log1p(-uniform01(engine)) / rate;
}

}  // namespace dyntrend
