#include "drc/rl/config.hpp"

#include <algorithm>

namespace drc::rl {

std::int64_t TrainConfig::total_updates() const {
  const auto per = steps_per_update();
  return (total_steps + per - 1) / per;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (!(discount > 0 && discount <= 1)) fail("discount must be in (0, 1]");
  if (!(lambda >= 0 && lambda <= 1)) fail("lambda must be in [0, 1]");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (unroll_length < 1) fail("unroll_length must be >= 1");
  if (entropy_weight < 0 || baseline_weight < 0 || logit_l2_weight < 0 || linear_l2_weight < 0)
    fail("loss weights must be >= 0");
  if (learning_rate < 0) fail("learning_rate must be >= 0");
  if (!(anneal_horizon > 0)) fail("anneal_horizon must be > 0");
  if (max_grad_norm < 0) fail("max_grad_norm must be >= 0");
  if (!(rho_bar > 0) || !(c_bar > 0)) fail("importance caps must be > 0");
  if (actors < 1) fail("actors must be >= 1");
  if (queue_capacity < 1) fail("queue_capacity must be >= 1");
  if (snapshot_lag < 0) fail("snapshot_lag must be >= 0");
  if (total_steps < 0) fail("total_steps must be >= 0");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

void TrainConfig::apply(const KeyValueFile& kv, const std::string& prefix) {
  auto d = [&](const char* k, double& out) {
    if (kv.contains(prefix + k)) out = parse_double(prefix + k, kv.get(prefix + k));
  };
  auto i = [&](const char* k, int& out) {
    if (kv.contains(prefix + k)) out = parse_int(prefix + k, kv.get(prefix + k));
  };
  d("discount", discount);
  d("lambda", lambda);
  i("batch_size", batch_size);
  i("unroll_length", unroll_length);
  d("entropy_weight", entropy_weight);
  d("baseline_weight", baseline_weight);
  d("logit_l2_weight", logit_l2_weight);
  d("linear_l2_weight", linear_l2_weight);
  d("learning_rate", learning_rate);
  d("anneal_horizon", anneal_horizon);
  d("adam.beta1", adam.beta1);
  d("adam.beta2", adam.beta2);
  d("adam.epsilon", adam.epsilon);
  d("max_grad_norm", max_grad_norm);
  d("rho_bar", rho_bar);
  d("c_bar", c_bar);
  i("actors", actors);
  i("queue_capacity", queue_capacity);
  i("snapshot_lag", snapshot_lag);
  if (kv.contains(prefix + "total_steps")) {
    // Accept 2e6-style values.
    total_steps = static_cast<std::int64_t>(parse_double(prefix + "total_steps", kv.get(prefix + "total_steps")));
  }
  i("checkpoint_every", checkpoint_every);
  validate();
}

void TrainConfig::write(KeyValueFile& kv, const std::string& prefix) const {
  auto d = [&](const char* k, double v) { kv.set(prefix + k, format_double(v)); };
  auto i = [&](const char* k, long long v) { kv.set(prefix + k, std::to_string(v)); };
  d("discount", discount);
  d("lambda", lambda);
  i("batch_size", batch_size);
  i("unroll_length", unroll_length);
  d("entropy_weight", entropy_weight);
  d("baseline_weight", baseline_weight);
  d("logit_l2_weight", logit_l2_weight);
  d("linear_l2_weight", linear_l2_weight);
  d("learning_rate", learning_rate);
  d("anneal_horizon", anneal_horizon);
  d("adam.beta1", adam.beta1);
  d("adam.beta2", adam.beta2);
  d("adam.epsilon", adam.epsilon);
  d("max_grad_norm", max_grad_norm);
  d("rho_bar", rho_bar);
  d("c_bar", c_bar);
  i("actors", actors);
  i("queue_capacity", queue_capacity);
  i("snapshot_lag", snapshot_lag);
  i("total_steps", total_steps);
  i("checkpoint_every", checkpoint_every);
}

double anneal_lr(double step, const TrainConfig& config) {
  if (step < 0) throw std::invalid_argument("anneal_lr: step must be >= 0");
  return config.learning_rate * std::max(0.0, 1.0 - step / config.anneal_horizon);
}

}  // namespace drc::rl
