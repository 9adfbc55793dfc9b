#pragma once

#include "drc/net/drc.hpp"
#include "drc/nn/adam.hpp"
#include "drc/rl/config.hpp"
#include "drc/rl/trajectory.hpp"
#include "drc/rl/vtrace.hpp"

#include <span>

namespace drc::rl {

/// Loss components, each already multiplied by its weight; total is their sum.
struct LossTerms {
  double total = 0;
  double policy = 0;
  double baseline = 0;
  double entropy = 0;  // -entropy_weight * mean entropy
  double logit_l2 = 0;
  double weight_l2 = 0;
  double mean_entropy = 0;  // unweighted, for monitoring
};

template <typename Scalar>
struct LossResult {
  LossTerms terms;
  nn::GradientRecord<Scalar> gradients;  // empty unless requested
  std::vector<VTraceOutput> vtrace;      // one per trajectory
  nn::Tensor<Scalar> logits;             // [(T + 1) B, A], time-major
  nn::Tensor<Scalar> values;             // [(T + 1) B, 1]
};

/// Replays the batch from the stored initial states under `params`, builds
/// V-trace targets and the composite loss averaged over B x T steps, and
/// optionally backpropagates through the whole unroll.
template <typename Scalar>
LossResult<Scalar> compute_loss(const net::DrcNet<Scalar>& net, const nn::ParameterSet<Scalar>& params,
                                std::span<const Trajectory> batch, const TrainConfig& config, bool gradients);

struct UpdateStats {
  LossTerms loss;
  double learning_rate = 0;
  double grad_norm = 0;
};

/// One Adam step at anneal_lr(env_steps). Throws nn::NonFiniteError on a
/// non-finite loss without touching the parameters.
UpdateStats learner_update(const net::DrcNet<float>& net, nn::ParameterSet<float>& params,
                           nn::AdamState<float>& adam, std::span<const Trajectory> batch, double env_steps,
                           const TrainConfig& config);

}  // namespace drc::rl
