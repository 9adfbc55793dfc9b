#pragma once

#include "drc/env/sokoban.hpp"

#include <cstdint>
#include <vector>

namespace drc::data {

enum class SolveStatus { solved, unsolvable, budget_exhausted };

std::string to_string(SolveStatus status);

struct Solution {
  std::vector<int> actions;  // SokobanAction values
  int pushes = 0;
  int length() const { return static_cast<int>(actions.size()); }
};

struct SolveResult {
  SolveStatus status = SolveStatus::budget_exhausted;
  Solution solution;
  std::int64_t expanded = 0;
  bool solved() const { return status == SolveStatus::solved; }
};

/// 1 for cells from which no sequence of pushes can bring a box onto any
/// target (covers corner and wall-line deadlocks without a target).
std::vector<std::uint8_t> dead_squares(const env::SokobanLevel& level);

/// Breadth-first search over push states (boxes plus the player's reachable
/// region), pruning pushes onto dead squares. Solutions are push-optimal;
/// walking moves between pushes are shortest paths. `node_budget` bounds
/// the number of expanded states.
SolveResult solve_bfs(const env::SokobanLevel& level, std::int64_t node_budget);

/// Replays `actions` from the level's start; true when it ends solved.
bool replay_solves(const env::SokobanLevel& level, const std::vector<int>& actions);

}  // namespace drc::data
