#pragma once

#include "drc/env/environment.hpp"

#include <array>
#include <functional>
#include <vector>

namespace drc::env {

class LevelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Tile : std::uint8_t { wall, floor, target };

/// A Sokoban position: static tiles plus box and player placement.
struct SokobanLevel {
  int height = 10;
  int width = 10;
  std::vector<Tile> tiles;         // row-major
  std::vector<std::uint8_t> boxes;  // 1 where a box stands
  Pos player;

  static SokobanLevel empty(int height, int width);

  int index(Pos p) const { return p.y * width + p.x; }
  bool inside(Pos p) const { return p.y >= 0 && p.x >= 0 && p.y < height && p.x < width; }
  Tile tile(Pos p) const { return tiles[static_cast<std::size_t>(index(p))]; }
  bool has_box(Pos p) const { return boxes[static_cast<std::size_t>(index(p))] != 0; }
  bool is_wall(Pos p) const { return !inside(p) || tile(p) == Tile::wall; }

  int box_count() const;
  int target_count() const;
  int boxes_on_target() const;
  bool solved() const { return boxes_on_target() == box_count(); }
  std::vector<Pos> box_positions() const;  // row-major order

  /// Rows in the Boxoban character set (#, space, ., $, @, *, +).
  std::vector<std::string> to_rows() const;
  static SokobanLevel from_rows(const std::vector<std::string>& rows);

  /// Throws LevelError on a broken invariant. `expected_boxes` < 0 skips the
  /// count check but still requires boxes == targets.
  void validate(int expected_boxes = -1) const;

  bool operator==(const SokobanLevel&) const = default;
};

enum SokobanAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kNoop = 4 };
constexpr int kSokobanActions = 5;

struct SokobanEvents {
  int boxes_on = 0;   // boxes pushed onto a target
  int boxes_off = 0;  // boxes pushed off a target
  bool completed = false;
  bool moved = false;
};

constexpr double kSokobanStepCost = -0.01;
constexpr double kSokobanBoxOn = 1.0;
constexpr double kSokobanBoxOff = -1.0;
constexpr double kSokobanComplete = 10.0;

/// Classic push dynamics on `level` in place; no episode bookkeeping.
SokobanEvents sokoban_apply(SokobanLevel& level, int action);
double sokoban_reward(const SokobanEvents& events);

/// Fixed 8x8 RGB sprites, one per entity class.
enum class Sprite { wall, floor, target, box, box_on_target, player, player_on_target, count };
constexpr int kSpriteSize = 8;
using SpriteImage = std::array<float, kSpriteSize * kSpriteSize * 3>;
const SpriteImage& sprite(Sprite s);

/// (8H, 8W, 3) image in [0, 1].
Observation sokoban_render(const SokobanLevel& level);

using LevelSource = std::function<SokobanLevel(std::uint64_t seed)>;

class SokobanEnv final : public Environment {
 public:
  SokobanEnv(LevelSource source, int episode_cap = 120);

  std::string name() const override { return "sokoban"; }
  nn::Shape observation_shape() const override;
  int action_count() const override { return kSokobanActions; }
  std::optional<int> noop_action() const override { return kNoop; }

  Observation reset(std::uint64_t seed) override;
  /// Starts an episode on a given level.
  Observation reset_level(const SokobanLevel& level);
  StepResult step(int action) override;
  Observation observation() const override { return sokoban_render(level_); }

  int steps() const override { return steps_; }
  bool done() const override { return done_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<SokobanEnv>(*this); }

  const SokobanLevel& level() const { return level_; }
  const SokobanEvents& last_events() const { return last_events_; }

 private:
  LevelSource source_;
  int cap_;
  SokobanLevel level_;
  SokobanEvents last_events_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace drc::env
