#pragma once

#include "drc/env/environment.hpp"
#include "drc/util/random.hpp"

#include <vector>

namespace drc::env {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridworldConfig {
  int size = 32;
  int obstacles_min = 12;
  int obstacles_max = 24;
  int side_min = 2;
  int side_max = 10;
  int episode_cap = 120;
  int max_attempts = 1000;  // rejection-sampling bound

  void validate() const;
};

struct GridworldLevel {
  int size = 0;
  std::vector<std::uint8_t> obstacle;  // row-major
  Pos player;
  Pos goal;
  int obstacle_squares = 0;  // number of squares sampled (they may overlap)

  bool blocked(Pos p) const { return obstacle[static_cast<std::size_t>(p.y * size + p.x)] != 0; }
  bool operator==(const GridworldLevel&) const = default;
};

/// Obstacle squares, then player and goal on distinct free cells, retried
/// until the goal is reachable.
GridworldLevel gridworld_generate(std::uint64_t seed, const GridworldConfig& config = {});

/// Shortest 4-connected path length from player to goal avoiding obstacles,
/// or -1 when unreachable.
int gridworld_distance(const GridworldLevel& level);

constexpr float kGridObstacle = 1.0f;
constexpr float kGridGoal = 0.66f;
constexpr float kGridPlayer = 0.33f;

class GridworldEnv final : public Environment {
 public:
  explicit GridworldEnv(GridworldConfig config = {});

  std::string name() const override { return "gridworld"; }
  nn::Shape observation_shape() const override { return {config_.size, config_.size, 1}; }
  int action_count() const override { return 4; }

  Observation reset(std::uint64_t seed) override;
  Observation reset_level(const GridworldLevel& level);
  StepResult step(int action) override;
  Observation observation() const override;

  int steps() const override { return steps_; }
  bool done() const override { return done_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<GridworldEnv>(*this); }

  const GridworldLevel& level() const { return level_; }

 private:
  GridworldConfig config_;
  GridworldLevel level_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace drc::env
