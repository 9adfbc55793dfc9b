#pragma once

#include "drc/env/environment.hpp"
#include "drc/net/drc.hpp"
#include "drc/rl/trajectory.hpp"
#include "drc/util/random.hpp"

#include <memory>
#include <span>

namespace drc::rl {

enum class ActionMode { sample, greedy };

/// Samples from softmax(logits), or takes the first argmax in greedy mode.
int select_action(std::span<const float> logits, Rng& rng, ActionMode mode);

/// An environment plus the recurrent state and RNG that persist across
/// unrolls. Episode k of the slot is reset with episode_seed(k).
class ActorSlot {
 public:
  ActorSlot(int index, std::uint64_t seed, std::unique_ptr<env::Environment> environment, const net::DrcNet<float>& net);

  int index() const { return index_; }
  std::uint64_t episode_seed(std::uint64_t episode) const { return derive_seed(splitmix64(seed_), episode); }
  env::Environment& environment() { return *env_; }
  const net::DrcState<float>& state() const { return state_; }

 private:
  friend std::vector<Trajectory> actor_rollout(const net::DrcNet<float>&, const nn::ParameterSet<float>&,
                                               std::span<ActorSlot* const>, int, ActionMode);
  void begin_episode();

  int index_;
  std::uint64_t seed_;
  std::unique_ptr<env::Environment> env_;
  net::DrcState<float> state_;
  net::DrcState<float> zero_;
  env::Observation observation_;
  Rng rng_;
  std::uint64_t episodes_ = 0;
  double episode_return_ = 0;
  bool started_ = false;
};

/// Steps every slot `unroll_length` times with one batched forward pass per
/// step. The recurrent state is zeroed whenever an episode ends.
std::vector<Trajectory> actor_rollout(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                      std::span<ActorSlot* const> slots, int unroll_length,
                                      ActionMode mode = ActionMode::sample);

Trajectory actor_rollout(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params, ActorSlot& slot,
                         int unroll_length, ActionMode mode = ActionMode::sample);

}  // namespace drc::rl
