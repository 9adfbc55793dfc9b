#include "drc/rl/actor.hpp"

#include <cmath>

namespace drc::rl {

using nn::Index;

int select_action(std::span<const float> logits, Rng& rng, ActionMode mode) {
  if (logits.empty()) throw std::invalid_argument("select_action: no logits");
  if (mode == ActionMode::greedy) {
    int best = 0;
    for (std::size_t a = 1; a < logits.size(); ++a)
      if (logits[a] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
    return best;
  }
  float m = logits[0];
  for (float l : logits) m = std::max(m, l);
  std::vector<double> w(logits.size());
  for (std::size_t a = 0; a < logits.size(); ++a) w[a] = std::exp(static_cast<double>(logits[a] - m));
  return sample_categorical<double>(rng, w);
}

ActorSlot::ActorSlot(int index, std::uint64_t seed, std::unique_ptr<env::Environment> environment,
                     const net::DrcNet<float>& net)
    : index_(index), seed_(seed), env_(std::move(environment)), zero_(net.zero_state(1)), rng_(make_rng(seed)) {
  if (!env_) throw std::invalid_argument("ActorSlot: null environment");
  state_ = zero_;
}

void ActorSlot::begin_episode() {
  observation_ = env_->reset(episode_seed(episodes_++));
  state_ = zero_;
  episode_return_ = 0;
  started_ = true;
}

std::vector<Trajectory> actor_rollout(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                      std::span<ActorSlot* const> slots, int unroll_length, ActionMode mode) {
  if (unroll_length < 1) throw std::invalid_argument("actor_rollout: unroll_length must be >= 1");
  const int actions = net.config().action_count;
  std::vector<Trajectory> out(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    ActorSlot& s = *slots[i];
    if (!s.started_) s.begin_episode();
    out[i].slot = s.index_;
    out[i].action_count = actions;
    out[i].initial_state = s.state_;
  }
  const nn::Shape obs_shape = net.config().observation_shape();
  const Index n = static_cast<Index>(slots.size());
  const Index per = obs_shape.numel();
  std::vector<net::DrcState<float>> states(slots.size());
  for (int t = 0; t < unroll_length; ++t) {
    nn::Tensor<float> batch(nn::Shape{n, obs_shape[0], obs_shape[1], obs_shape[2]});
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& o = slots[i]->observation_;
      nn::require_same_shape(o.shape(), obs_shape, "actor_rollout observation");
      std::copy(o.data(), o.data() + per, batch.data() + static_cast<Index>(i) * per);
      states[i] = slots[i]->state_;
    }
    const auto result = net.forward(params, net::DrcState<float>::stack(states), batch);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      ActorSlot& s = *slots[i];
      Trajectory& traj = out[i];
      const float* row = result.logits.data() + static_cast<Index>(i) * actions;
      const int a = select_action(std::span<const float>(row, static_cast<std::size_t>(actions)), s.rng_, mode);
      traj.observations.push_back(s.observation_);
      traj.actions.push_back(a);
      traj.behaviour_logits.insert(traj.behaviour_logits.end(), row, row + actions);
      const auto step = s.env_->step(a);
      s.episode_return_ += step.reward;
      traj.rewards.push_back(step.reward);
      traj.dones.push_back(step.done ? 1 : 0);
      if (step.done) {
        traj.episodes.push_back({s.episode_return_, s.env_->steps(), step.solved});
        s.begin_episode();
      } else {
        s.observation_ = step.observation;
        s.state_ = result.state.select(static_cast<Index>(i));
      }
    }
  }
  for (std::size_t i = 0; i < slots.size(); ++i) out[i].observations.push_back(slots[i]->observation_);
  return out;
}

Trajectory actor_rollout(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params, ActorSlot& slot,
                         int unroll_length, ActionMode mode) {
  ActorSlot* one[] = {&slot};
  return std::move(actor_rollout(net, params, std::span<ActorSlot* const>(one), unroll_length, mode).front());
}

}  // namespace drc::rl
