#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace drc {

/// All randomness flows through mt19937_64, whose output sequence is fixed by
/// the standard. The helpers below avoid std::*_distribution, whose outputs
/// are implementation-defined, so seeded runs agree across toolchains.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream for task `index` under `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) { return base ^ index; }

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Uniform integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Samples an index from unnormalized non-negative weights.
template <typename Real>
int sample_categorical(Rng& rng, std::span<const Real> weights) {
  double total = 0;
  for (Real w : weights) total += static_cast<double>(w);
  if (!(total > 0)) throw std::invalid_argument("sample_categorical: weights sum to zero");
  const double u = uniform01(rng) * total;
  double acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += static_cast<double>(weights[i]);
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) return static_cast<int>(i);
  }
  return 0;
}

template <typename T>
void shuffle(Rng& rng, std::span<T> items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

}  // namespace drc
