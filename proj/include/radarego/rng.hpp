#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace radarego {

// Seed-splitting scheme: every consumer of randomness derives its own
// engine from (master seed, stream name). Adding a new named consumer
// never perturbs the draws of existing ones.

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name) {
  return splitmix64(master ^ fnv1a64(name));
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::string_view name) {
  return std::mt19937_64(stream_seed(master, name));
}

// Distributions are hand-rolled on top of the engine so draws are pinned
// to this codebase, not to a particular standard library.

/// Uniform double in [0, 1).
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

/// Uniform integer in [lo, hi], inclusive.
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

/// Standard normal via Box-Muller. Two engine draws per value, no caching.
inline double normal(std::mt19937_64& rng, double mean = 0.0, double sigma = 1.0) {
  double u1 = uniform_unit(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = uniform_unit(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + sigma * r * std::cos(2.0 * M_PI * u2);
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
  return uniform_unit(rng) < p;
}

}  // namespace radarego
