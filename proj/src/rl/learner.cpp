#include "drc/rl/learner.hpp"

#include "drc/nn/ops.hpp"

#include <cmath>

namespace drc::rl {

using nn::Index;
using nn::Shape;
using nn::Tensor;

template <typename Scalar>
LossResult<Scalar> compute_loss(const net::DrcNet<Scalar>& net, const nn::ParameterSet<Scalar>& params,
                                std::span<const Trajectory> batch, const TrainConfig& config, bool gradients) {
  using V = nn::Var<Scalar>;
  if (batch.empty()) throw std::invalid_argument("compute_loss: empty batch");
  const Index b_count = static_cast<Index>(batch.size());
  const int steps = batch.front().length();
  const int actions = net.config().action_count;
  for (const auto& traj : batch) {
    traj.validate();
    if (traj.length() != steps) throw std::invalid_argument("compute_loss: trajectories differ in length");
    if (traj.action_count != actions) throw std::invalid_argument("compute_loss: action count mismatch");
  }
  const Shape obs_shape = net.config().observation_shape();
  const Index per = obs_shape.numel();

  nn::Graph<Scalar> g(gradients);
  // Observations time-major: row t * B + b.
  Tensor<Scalar> obs(Shape{(steps + 1) * b_count, obs_shape[0], obs_shape[1], obs_shape[2]});
  for (int t = 0; t <= steps; ++t) {
    for (Index b = 0; b < b_count; ++b) {
      const auto& o = batch[static_cast<std::size_t>(b)].observations[static_cast<std::size_t>(t)];
      nn::require_same_shape(o.shape(), obs_shape, "compute_loss observation");
      Scalar* dst = obs.data() + (t * b_count + b) * per;
      for (Index i = 0; i < per; ++i) dst[i] = static_cast<Scalar>(o[i]);
    }
  }
  V encoded = net.encode(g, params, g.constant(std::move(obs)));
  V core = net.core_input(g, params, encoded);

  std::vector<net::DrcState<Scalar>> initial;
  for (const auto& traj : batch) {
    net::DrcState<Scalar> s;
    for (const auto& c : traj.initial_state.cell) s.cell.push_back(c.template cast<Scalar>());
    for (const auto& h : traj.initial_state.hidden) s.hidden.push_back(h.template cast<Scalar>());
    initial.push_back(std::move(s));
  }
  auto state = net.bind_state(g, net::DrcState<Scalar>::stack(initial));
  std::vector<V> outputs;
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) {
      std::vector<Scalar> mask(static_cast<std::size_t>(b_count), Scalar(1));
      bool any = false;
      for (Index b = 0; b < b_count; ++b) {
        if (batch[static_cast<std::size_t>(b)].dones[static_cast<std::size_t>(t - 1)]) {
          mask[static_cast<std::size_t>(b)] = 0;
          any = true;
        }
      }
      if (any) {
        for (auto& c : state.cell) c = nn::scale_rows(c, mask);
        for (auto& h : state.hidden) h = nn::scale_rows(h, mask);
      }
    }
    state = net.step(g, params, state, nn::slice_rows(core, t * b_count, b_count));
    outputs.push_back(state.hidden.back());
  }
  const auto heads = net.heads(g, params, nn::concat_rows(std::span<const V>(outputs)), encoded);

  // V-trace on numbers (no gradient flows through targets).
  const auto& logit_values = heads.logits.value();
  const auto& value_values = heads.value.value();
  LossResult<Scalar> result;
  const Index rows = steps * b_count;
  Tensor<Scalar> pg_weights(Shape{rows});
  Tensor<Scalar> targets(Shape{rows});
  std::vector<int> taken(static_cast<std::size_t>(rows));
  for (Index b = 0; b < b_count; ++b) {
    const auto& traj = batch[static_cast<std::size_t>(b)];
    std::vector<double> values(static_cast<std::size_t>(steps) + 1);
    std::vector<double> logits(static_cast<std::size_t>(steps) * actions);
    for (int t = 0; t <= steps; ++t) {
      const Index r = t * b_count + b;
      values[static_cast<std::size_t>(t)] = static_cast<double>(value_values[r]);
      if (t == steps) continue;
      for (int a = 0; a < actions; ++a)
        logits[static_cast<std::size_t>(t * actions + a)] = static_cast<double>(logit_values.matrix()(r, a));
    }
    auto vt = vtrace_targets(traj, values, logits, config);
    for (int t = 0; t < steps; ++t) {
      const Index r = t * b_count + b;
      pg_weights[r] = static_cast<Scalar>(-vt.advantages[static_cast<std::size_t>(t)] / static_cast<double>(rows));
      targets[r] = static_cast<Scalar>(vt.targets[static_cast<std::size_t>(t)]);
      taken[static_cast<std::size_t>(r)] = traj.actions[static_cast<std::size_t>(t)];
    }
    result.vtrace.push_back(std::move(vt));
  }

  const Scalar inv_rows = Scalar(1) / static_cast<Scalar>(rows);
  V logits = nn::slice_rows(heads.logits, 0, rows);
  V values = nn::reshape(nn::slice_rows(heads.value, 0, rows), Shape{rows});
  V logp = nn::log_softmax(logits);

  V policy = nn::weighted_sum(nn::gather_cols(logp, taken), pg_weights);
  V baseline = nn::scale(nn::sum(nn::square(nn::sub(values, g.constant(targets)))),
                         static_cast<Scalar>(config.baseline_weight) * inv_rows);
  V neg_entropy_sum = nn::sum(nn::mul(nn::exp(logp), logp));
  V entropy = nn::scale(neg_entropy_sum, static_cast<Scalar>(config.entropy_weight) * inv_rows);
  V logit_l2 = nn::scale(nn::mean(nn::square(logits)), static_cast<Scalar>(config.logit_l2_weight));
  V weight_l2 = nn::scale(nn::add(nn::sum(nn::square(g.parameter(params, "head.policy.w"))),
                                  nn::sum(nn::square(g.parameter(params, "head.value.w")))),
                          static_cast<Scalar>(config.linear_l2_weight));
  V total = nn::add(nn::add(nn::add(policy, baseline), nn::add(entropy, logit_l2)), weight_l2);

  auto num = [](V v) { return static_cast<double>(v.value()[0]); };
  result.terms = {num(total), num(policy), num(baseline), num(entropy), num(logit_l2), num(weight_l2),
                  -num(neg_entropy_sum) / static_cast<double>(rows)};
  result.logits = logit_values;
  result.values = value_values;
  if (gradients) {
    g.backward(total);
    result.gradients = g.parameter_gradients();
  } else if (!std::isfinite(result.terms.total)) {
    throw nn::NonFiniteError("compute_loss: loss is not finite");
  }
  return result;
}

template LossResult<float> compute_loss(const net::DrcNet<float>&, const nn::ParameterSet<float>&,
                                        std::span<const Trajectory>, const TrainConfig&, bool);
template LossResult<double> compute_loss(const net::DrcNet<double>&, const nn::ParameterSet<double>&,
                                         std::span<const Trajectory>, const TrainConfig&, bool);

UpdateStats learner_update(const net::DrcNet<float>& net, nn::ParameterSet<float>& params,
                           nn::AdamState<float>& adam, std::span<const Trajectory> batch, double env_steps,
                           const TrainConfig& config) {
  auto result = compute_loss(net, params, batch, config, true);
  UpdateStats stats;
  stats.loss = result.terms;
  stats.learning_rate = anneal_lr(env_steps, config);
  stats.grad_norm = static_cast<double>(
      config.max_grad_norm > 0 ? nn::clip_by_global_norm(result.gradients, static_cast<float>(config.max_grad_norm))
                               : nn::global_norm(result.gradients));
  if (!std::isfinite(stats.grad_norm)) throw nn::NonFiniteError("learner_update: gradient norm is not finite");
  nn::adam_step(params, result.gradients, adam, stats.learning_rate, config.adam);
  return stats;
}

}  // namespace drc::rl
