#pragma once

#include "drc/nn/tensor.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace drc::env {

using nn::Index;
using Observation = nn::Tensor<float>;

class EpisodeDoneError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct StepResult {
  Observation observation;
  double reward = 0;
  bool done = false;
  bool solved = false;
};

/// A single-agent episodic environment. Each instance owns its RNG and is a
/// pure function of (reset seed, action sequence).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual nn::Shape observation_shape() const = 0;
  virtual int action_count() const = 0;
  /// Action with no effect on the world, if the game has one.
  virtual std::optional<int> noop_action() const { return std::nullopt; }

  /// Starts a new episode and returns its first observation.
  virtual Observation reset(std::uint64_t seed) = 0;
  /// Throws EpisodeDoneError once the episode has ended.
  virtual StepResult step(int action) = 0;
  virtual Observation observation() const = 0;

  virtual int steps() const = 0;
  virtual bool done() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

inline void check_action(int action, int count, const std::string& env) {
  if (action < 0 || action >= count) {
    throw std::out_of_range(env + ": action " + std::to_string(action) + " outside [0, " + std::to_string(count) + ")");
  }
}

/// Cell offsets for up, down, left, right.
constexpr int kDy[4] = {-1, 1, 0, 0};
constexpr int kDx[4] = {0, 0, -1, 1};

struct Pos {
  int y = 0;
  int x = 0;
  auto operator<=>(const Pos&) const = default;
};

}  // namespace drc::env
