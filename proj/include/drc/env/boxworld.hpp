#pragma once

#include "drc/env/environment.hpp"
#include "drc/util/random.hpp"

#include <array>
#include <vector>

namespace drc::env {

struct BoxworldConfig {
  int room = 12;  // playable square; the observation adds a one-pixel border
  int branch_length = 3;
  int max_solution_length = 4;
  int min_solution_length = 1;
  int max_distractors = 2;
  int episode_cap = 120;

  void validate() const;
};

constexpr int kGem = -2;  // content id of the gem box
constexpr int kNoKey = -1;

struct BoxworldBox {
  Pos content;  // key (or gem) pixel; the lock is the pixel to its right
  int lock = 0;
  int content_key = 0;  // key colour inside, or kGem
  bool on_solution = false;
  bool opened = false;
  Pos lock_pos() const { return {content.y, content.x + 1}; }
  bool operator==(const BoxworldBox&) const = default;
};

struct BoxworldLevel {
  int room = 12;
  std::vector<BoxworldBox> boxes;
  std::vector<int> solution;  // box indices in opening order; last holds the gem
  struct LooseKey {
    Pos pos;
    int colour = 0;
    bool taken = false;
    bool operator==(const LooseKey&) const = default;
  };
  std::vector<LooseKey> keys;  // the initial loose key plus keys released from boxes
  Pos player;
  int held = kNoKey;
  bool gem_released = false;  // gem box opened, gem lies at its content cell
  bool gem_taken = false;

  bool operator==(const BoxworldLevel&) const = default;
};

BoxworldLevel boxworld_generate(std::uint64_t seed, const BoxworldConfig& config = {});

/// Whether some opening order still releases the gem, ignoring movement.
bool boxworld_gem_reachable(const BoxworldLevel& level);

/// Scripted walk-through along the solution chain (actions 0..3).
std::vector<int> boxworld_solution_actions(const BoxworldLevel& level);

/// Fixed colour table; entry i is key/lock colour i.
const std::vector<std::array<float, 3>>& boxworld_palette();

constexpr double kBoxworldCorrectBox = 1.0;
constexpr double kBoxworldDistractorBox = -1.0;
constexpr double kBoxworldGem = 10.0;

class BoxworldEnv final : public Environment {
 public:
  explicit BoxworldEnv(BoxworldConfig config = {});

  std::string name() const override { return "boxworld"; }
  nn::Shape observation_shape() const override { return {config_.room + 2, config_.room + 2, 3}; }
  int action_count() const override { return 4; }

  Observation reset(std::uint64_t seed) override;
  Observation reset_level(const BoxworldLevel& level);
  StepResult step(int action) override;
  Observation observation() const override;

  int steps() const override { return steps_; }
  bool done() const override { return done_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<BoxworldEnv>(*this); }

  const BoxworldLevel& level() const { return level_; }

 private:
  BoxworldConfig config_;
  BoxworldLevel level_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace drc::env
