#pragma once

#include "drc/env/environment.hpp"
#include "drc/util/random.hpp"

namespace drc::env {

/// One-step, two-state contextual bandit: the observation shows the state,
/// and action == state pays 1. A minimal learnability check for training.
class BanditEnv final : public Environment {
 public:
  static constexpr int kSize = 4;

  std::string name() const override { return "bandit"; }
  nn::Shape observation_shape() const override { return {kSize, kSize, 1}; }
  int action_count() const override { return 2; }

  Observation reset(std::uint64_t seed) override {
    Rng rng = make_rng(seed);
    state_ = static_cast<int>(rng() & 1);
    done_ = false;
    steps_ = 0;
    return observation();
  }
  StepResult step(int action) override {
    if (done_) throw EpisodeDoneError("bandit: step after episode end");
    check_action(action, 2, "bandit");
    ++steps_;
    done_ = true;
    StepResult r;
    r.reward = action == state_ ? 1.0 : 0.0;
    r.solved = action == state_;
    r.done = true;
    r.observation = observation();
    return r;
  }
  Observation observation() const override {
    return Observation::constant(observation_shape(), state_ == 1 ? 1.0f : -1.0f);
  }

  int steps() const override { return steps_; }
  bool done() const override { return done_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<BanditEnv>(*this); }

  int state() const { return state_; }

 private:
  int state_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace drc::env
