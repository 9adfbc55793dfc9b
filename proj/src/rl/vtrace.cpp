#include "drc/rl/vtrace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drc::rl {

void Trajectory::validate() const {
  const auto t = actions.size();
  auto fail = [](const std::string& m) { throw CorruptTrajectoryError("trajectory: " + m); };
  if (observations.size() != t + 1) fail("expected T + 1 observations");
  if (rewards.size() != t || dones.size() != t) fail("rewards/dones length mismatch");
  if (behaviour_logits.size() != t * static_cast<std::size_t>(action_count)) fail("behaviour logits size mismatch");
  for (int a : actions)
    if (a < 0 || a >= action_count) fail("action out of range");
  for (double r : rewards)
    if (!std::isfinite(r)) fail("non-finite reward");
  if (initial_state.batch() != 1) fail("initial state must have batch 1");
}

double log_prob(std::span<const double> logits, int action) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0;
  for (double l : logits) s += std::exp(l - m);
  return logits[static_cast<std::size_t>(action)] - m - std::log(s);
}

VTraceOutput vtrace(const VTraceInput& in, double lambda, double rho_bar, double c_bar) {
  const std::size_t n = in.rewards.size();
  if (in.discounts.size() != n || in.log_ratios.size() != n || in.values.size() != n) {
    throw std::invalid_argument("vtrace: input lengths differ");
  }
  VTraceOutput out;
  out.targets.resize(n);
  out.advantages.resize(n);
  out.rhos.resize(n);
  out.cs.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double ratio = std::exp(in.log_ratios[t]);
    out.rhos[t] = std::min(rho_bar, ratio);
    out.cs[t] = lambda * std::min(c_bar, ratio);
  }
  double next_value = in.bootstrap_value;
  double acc = 0;  // v_{t+1} - V_{t+1}
  for (std::size_t k = n; k-- > 0;) {
    const double delta = out.rhos[k] * (in.rewards[k] + in.discounts[k] * next_value - in.values[k]);
    acc = delta + in.discounts[k] * out.cs[k] * acc;
    out.targets[k] = in.values[k] + acc;
    next_value = in.values[k];
  }
  for (std::size_t t = 0; t < n; ++t) {
    const double v_next = t + 1 < n ? out.targets[t + 1] : in.bootstrap_value;
    out.advantages[t] = out.rhos[t] * (in.rewards[t] + in.discounts[t] * v_next - in.values[t]);
  }
  return out;
}

VTraceOutput vtrace_targets(const Trajectory& traj, std::span<const double> target_values,
                            std::span<const double> target_logits, const TrainConfig& config) {
  const int n = traj.length();
  const int a = traj.action_count;
  if (target_values.size() != static_cast<std::size_t>(n) + 1) {
    throw std::invalid_argument("vtrace_targets: need T + 1 target values");
  }
  if (target_logits.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(a)) {
    throw std::invalid_argument("vtrace_targets: target logits must be T x A");
  }
  VTraceInput in;
  std::vector<double> mu(static_cast<std::size_t>(a));
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < a; ++k) mu[static_cast<std::size_t>(k)] = traj.logits(t)[k];
    const double log_mu = log_prob(mu, traj.actions[static_cast<std::size_t>(t)]);
    if (!std::isfinite(log_mu)) {
      throw CorruptTrajectoryError("vtrace: taken action " + std::to_string(traj.actions[static_cast<std::size_t>(t)]) +
                                   " has zero behaviour probability at step " + std::to_string(t));
    }
    const double log_pi = log_prob(target_logits.subspan(static_cast<std::size_t>(t) * a, static_cast<std::size_t>(a)),
                                   traj.actions[static_cast<std::size_t>(t)]);
    in.log_ratios.push_back(log_pi - log_mu);
    in.rewards.push_back(traj.rewards[static_cast<std::size_t>(t)]);
    in.discounts.push_back(traj.dones[static_cast<std::size_t>(t)] ? 0.0 : config.discount);
    in.values.push_back(target_values[static_cast<std::size_t>(t)]);
  }
  in.bootstrap_value = target_values[static_cast<std::size_t>(n)];
  return vtrace(in, config.lambda, config.rho_bar, config.c_bar);
}

}  // namespace drc::rl
