#pragma once

#include "drc/nn/adam.hpp"
#include "drc/util/key_value.hpp"

#include <cstdint>
#include <string>

namespace drc::rl {

struct TrainConfig {
  double discount = 0.97;
  double lambda = 0.97;
  int batch_size = 32;
  int unroll_length = 20;

  double entropy_weight = 0.01;
  double baseline_weight = 0.5;
  double logit_l2_weight = 1e-3;   // policy logits only
  double linear_l2_weight = 1e-5;  // policy and value output layers

  double learning_rate = 4e-4;
  double anneal_horizon = 1.5e9;  // environment steps until lr reaches 0
  nn::AdamConfig adam;
  double max_grad_norm = 0;  // 0 disables clipping

  double rho_bar = 1;
  double c_bar = 1;

  int actors = 4;
  int queue_capacity = 64;
  int snapshot_lag = 1;  // round r acts with parameters of update r - lag

  std::int64_t total_steps = 0;  // environment steps
  int checkpoint_every = 0;      // updates; 0 writes only the final checkpoint

  std::int64_t steps_per_update() const { return static_cast<std::int64_t>(batch_size) * unroll_length; }
  /// Updates needed to consume total_steps (rounded up).
  std::int64_t total_updates() const;

  void validate() const;
  void apply(const KeyValueFile& kv, const std::string& prefix = "train.");
  void write(KeyValueFile& kv, const std::string& prefix = "train.") const;
};

/// lr * max(0, 1 - step / horizon).
double anneal_lr(double step, const TrainConfig& config);

}  // namespace drc::rl
