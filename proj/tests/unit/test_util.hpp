#pragma once

#include "drc/nn/tensor.hpp"
#include "drc/util/random.hpp"

#include <filesystem>
#include <string>

namespace drc::test {

template <typename Scalar = double>
nn::Tensor<Scalar> random_tensor(nn::Shape shape, Rng& rng, double lo = -1, double hi = 1) {
  nn::Tensor<Scalar> t(shape);
  for (nn::Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(lo + (hi - lo) * uniform01(rng));
  return t;
}

/// Random values kept at least `gap` away from zero (for kinked ops).
inline nn::Tensor<double> random_away_from_zero(nn::Shape shape, Rng& rng, double gap = 0.05) {
  nn::Tensor<double> t(shape);
  for (nn::Index i = 0; i < t.size(); ++i) {
    const double m = gap + (1 - gap) * uniform01(rng);
    t[i] = (rng() & 1) ? m : -m;
  }
  return t;
}

/// Distinct values spaced 0.1 apart in random order (no near ties for max).
inline nn::Tensor<double> random_distinct(nn::Shape shape, Rng& rng) {
  nn::Tensor<double> t(shape);
  std::vector<double> v(static_cast<std::size_t>(t.size()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i) - 0.05 * static_cast<double>(v.size());
  shuffle(rng, std::span<double>(v));
  for (nn::Index i = 0; i < t.size(); ++i) t[i] = v[static_cast<std::size_t>(i)];
  return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("drc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path source_dir() { return DRC_SOURCE_DIR; }

}  // namespace drc::test
