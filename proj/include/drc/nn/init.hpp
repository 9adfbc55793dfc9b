#pragma once

#include "drc/nn/tensor.hpp"
#include "drc/util/random.hpp"

#include <cmath>

namespace drc::nn {

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)). For conv kernels [K, K, Cin, Cout]
/// and dense weights [F, O] the fan-in is everything but the last dimension.
template <typename Scalar>
Tensor<Scalar> fan_in_uniform(const Shape& shape, Rng& rng) {
  Tensor<Scalar> t(shape);
  const Index fan_in = shape.numel() / shape.back();
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * bound);
  return t;
}

}  // namespace drc::nn
