#pragma once

#include "drc/rl/config.hpp"
#include "drc/rl/trajectory.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace drc::rl {

class CorruptTrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VTraceOutput {
  std::vector<double> targets;     // v_s
  std::vector<double> advantages;  // rho_s (r_s + gamma_s v_{s+1} - V_s)
  std::vector<double> rhos;        // min(rho_bar, pi / mu)
  std::vector<double> cs;          // lambda * min(c_bar, pi / mu)
};

/// Per-step inputs; discounts are gamma * (1 - done_t), so nothing crosses an
/// episode boundary.
struct VTraceInput {
  std::vector<double> rewards;
  std::vector<double> discounts;
  std::vector<double> log_ratios;  // log pi(a_t) - log mu(a_t)
  std::vector<double> values;      // V(x_t)
  double bootstrap_value = 0;      // V(x_T)
};

/// v_s - V_s = delta_s + gamma_s c_s (v_{s+1} - V_{s+1}),
/// delta_s = rho_s (r_s + gamma_s V_{s+1} - V_s), v_T = V_T.
VTraceOutput vtrace(const VTraceInput& input, double lambda, double rho_bar = 1, double c_bar = 1);

/// V-trace for one trajectory given learner-side logits (T x A, row-major)
/// and values (T + 1 entries, the last bootstrapping). Throws
/// CorruptTrajectoryError when a taken action had zero behaviour probability.
VTraceOutput vtrace_targets(const Trajectory& trajectory, std::span<const double> target_values,
                            std::span<const double> target_logits, const TrainConfig& config);

/// log softmax(row)[action] computed in double.
double log_prob(std::span<const double> logits, int action);

}  // namespace drc::rl
