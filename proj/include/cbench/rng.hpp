#pragma once

// Seed-stream utilities.  Every stochastic routine in the library takes an
// explicit 64-bit seed; parallel work derives per-task engines through
// substream(), so results never depend on thread scheduling.

#include <cstdint>
#include <random>

namespace cbench {

// SplitMix64 finalizer: cheap, well-mixed, and stable across platforms.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base) { return splitmix64(base); }

// Fold a path of stream ids into the base seed.  Distinct paths give
// independent streams for all practical purposes.
template <class... Rest>
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t id, Rest... rest) {
  return mix_seed(splitmix64(base ^ splitmix64(id + 0x632be59bd9b4e019ull)),
                  static_cast<std::uint64_t>(rest)...);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

template <class... Ids>
inline Engine substream(std::uint64_t base, Ids... ids) {
  return Engine(mix_seed(base, static_cast<std::uint64_t>(ids)...));
}

inline double draw_normal(Engine& eng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(eng);
}

inline double draw_uniform(Engine& eng, double a, double b) {
  std::uniform_real_distribution<double> d(a, b);
  return d(eng);
}

// Standard Laplace via inverse CDF (median 0, scale 1).
inline double draw_laplace(Engine& eng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  const double u = d(eng) - 0.5;
  const double a = 1.0 - 2.0 * std::abs(u);
  const double x = -std::log(a <= 0.0 ? 5e-324 : a);
  return u < 0.0 ? -x : x;
}

inline double draw_cauchy(Engine& eng) {
  std::cauchy_distribution<double> d(0.0, 1.0);
  return d(eng);
}

}  // namespace cbench
