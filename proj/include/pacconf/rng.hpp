// rng.hpp - counter-based seed splitting so any trial can be replayed alone.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pacconf {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for item `index` of stream `stream` under a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) + index);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return Engine(derive_seed(seed, stream, index));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1] from a 64-bit hash value.
inline double hash_to_open_unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

/// Standard normal draw fixed entirely by `key` (Box-Muller on two hashes).
inline double hashed_normal(std::uint64_t key) {
  const double u1 = hash_to_open_unit(splitmix64(key));
  const double u2 = hash_to_open_unit(splitmix64(key ^ 0x5851f42d4c957f2dULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Named random streams; keeping them distinct keeps data pools independent.
namespace stream {
inline constexpr std::uint64_t calibration_draw = 1;
inline constexpr std::uint64_t shield_w_pool = 2;
inline constexpr std::uint64_t shield_z_pool = 3;
inline constexpr std::uint64_t shield_eval = 4;
inline constexpr std::uint64_t shield_oracle = 5;
inline constexpr std::uint64_t cascade_draw = 6;
inline constexpr std::uint64_t coverage_trial = 7;
inline constexpr std::uint64_t binomial_draw = 8;
inline constexpr std::uint64_t state_score = 9;
}  // namespace stream

}  // namespace pacconf
