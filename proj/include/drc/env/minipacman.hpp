#pragma once

#include "drc/env/environment.hpp"
#include "drc/util/random.hpp"

#include <array>
#include <string>
#include <vector>

namespace drc::env {

struct MiniPacmanConfig {
  int ghosts = 3;
  int pills = 2;
  double ghost_move_probability = 0.95;
  int edible_steps = 20;  // duration of a power pill
  int fade_steps = 5;     // final edible steps shown in the warning colour
  int episode_cap = 1000;

  void validate() const;
};

/// The fixed 15x19 maze ('#' wall, '.' corridor).
const std::vector<std::string>& minipacman_maze();
constexpr int kPacmanRows = 15;
constexpr int kPacmanCols = 19;
constexpr Pos kPacmanStart{7, 9};

struct Ghost {
  Pos pos;
  int heading = -1;  // last move direction
  int edible = 0;    // remaining edible steps
  bool operator==(const Ghost&) const = default;
};

struct MiniPacmanState {
  std::vector<std::uint8_t> food;  // row-major, 1 where food remains
  std::vector<std::uint8_t> pill;
  Pos player = kPacmanStart;
  std::vector<Ghost> ghosts;
  int levels_cleared = 0;
  bool operator==(const MiniPacmanState&) const = default;
};

constexpr double kPacmanFood = 1.0;
constexpr double kPacmanPill = 2.0;
constexpr double kPacmanGhost = 5.0;
constexpr int kPacmanStay = 4;

/// Entity colours, all distinct.
namespace pacman_colour {
constexpr std::array<float, 3> wall{1.0f, 1.0f, 1.0f};
constexpr std::array<float, 3> food{0.0f, 0.0f, 0.6f};
constexpr std::array<float, 3> pill{0.3f, 0.8f, 1.0f};
constexpr std::array<float, 3> player{0.0f, 0.9f, 0.0f};
constexpr std::array<float, 3> ghost{0.9f, 0.0f, 0.0f};
constexpr std::array<float, 3> edible{1.0f, 1.0f, 0.0f};
constexpr std::array<float, 3> fading{1.0f, 0.55f, 0.0f};
}  // namespace pacman_colour

class MiniPacmanEnv final : public Environment {
 public:
  explicit MiniPacmanEnv(MiniPacmanConfig config = {});

  std::string name() const override { return "minipacman"; }
  nn::Shape observation_shape() const override { return {kPacmanRows, kPacmanCols, 3}; }
  int action_count() const override { return 5; }

  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  Observation observation() const override;

  int steps() const override { return steps_; }
  bool done() const override { return done_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<MiniPacmanEnv>(*this); }

  const MiniPacmanState& state() const { return state_; }
  MiniPacmanState& mutable_state() { return state_; }
  int food_left() const;

 private:
  void populate_level();
  void move_ghost(Ghost& g);
  double resolve_contacts(bool& eaten);

  MiniPacmanConfig config_;
  MiniPacmanState state_;
  Rng rng_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace drc::env
