#pragma once

#include "drc/nn/parameters.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace drc::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-4;
};

/// First/second moment estimates per trainable parameter plus the step count.
template <typename Scalar>
struct AdamState {
  std::map<std::string, Tensor<Scalar>> first_moment;
  std::map<std::string, Tensor<Scalar>> second_moment;
  std::int64_t step = 0;

  static AdamState zeros_like(const ParameterSet<Scalar>& params) {
    AdamState s;
    for (const auto& [path, e] : params.entries()) {
      if (!e.trainable) continue;
      s.first_moment.emplace(path, Tensor<Scalar>(e.value.shape()));
      s.second_moment.emplace(path, Tensor<Scalar>(e.value.shape()));
    }
    return s;
  }

  bool operator==(const AdamState&) const = default;
};

/// One Adam update with bias correction. Parameters absent from `grads`
/// are treated as having zero gradient, so their moments still decay.
template <typename Scalar>
void adam_step(ParameterSet<Scalar>& params, const GradientRecord<Scalar>& grads, AdamState<Scalar>& state,
               double learning_rate, const AdamConfig& config = {}) {
  if (learning_rate < 0) throw std::invalid_argument("adam_step: learning rate must be >= 0");
  for (const auto& [path, g] : grads) {
    const auto& e = params.entry(path);
    if (!e.trainable) throw std::invalid_argument("adam_step: gradient for frozen parameter " + path);
    require_same_shape(e.value.shape(), g.shape(), ("adam_step(" + path + ")").c_str());
  }

  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(config.beta1);
  const auto b2 = static_cast<Scalar>(config.beta2);
  const auto correction1 = static_cast<Scalar>(1.0 - std::pow(config.beta1, t));
  const auto correction2 = static_cast<Scalar>(1.0 - std::pow(config.beta2, t));
  const auto lr = static_cast<Scalar>(learning_rate);
  const auto eps = static_cast<Scalar>(config.epsilon);

  for (auto& [path, e] : params.entries()) {
    if (!e.trainable) continue;
    auto& m = state.first_moment.try_emplace(path, Tensor<Scalar>(e.value.shape())).first->second;
    auto& v = state.second_moment.try_emplace(path, Tensor<Scalar>(e.value.shape())).first->second;
    require_same_shape(m.shape(), e.value.shape(), ("adam_step moment(" + path + ")").c_str());

    auto it = grads.find(path);
    if (it != grads.end()) {
      const auto ga = it->second.array();
      m.array() = b1 * m.array() + (Scalar(1) - b1) * ga;
      v.array() = b2 * v.array() + (Scalar(1) - b2) * ga.square();
    } else {
      m.array() *= b1;
      v.array() *= b2;
    }
    if (lr != Scalar(0)) {
      e.value.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
    }
  }
}

}  // namespace drc::nn
