#include "drc/env/gridworld.hpp"

#include <algorithm>
#include <deque>

namespace drc::env {

void GridworldConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("gridworld config: " + m); };
  if (size < 2) fail("size must be >= 2");
  if (obstacles_min < 0 || obstacles_max < obstacles_min) fail("bad obstacle count range");
  if (side_min < 1 || side_max < side_min || side_max > size) fail("bad obstacle side range");
  if (episode_cap <= 0) fail("episode cap must be > 0");
  if (max_attempts <= 0) fail("max_attempts must be > 0");
}

int gridworld_distance(const GridworldLevel& level) {
  const int n = level.size;
  std::vector<int> dist(static_cast<std::size_t>(n * n), -1);
  std::deque<Pos> queue{level.player};
  dist[static_cast<std::size_t>(level.player.y * n + level.player.x)] = 0;
  while (!queue.empty()) {
    const Pos p = queue.front();
    queue.pop_front();
    const int d = dist[static_cast<std::size_t>(p.y * n + p.x)];
    if (p == level.goal) return d;
    for (int a = 0; a < 4; ++a) {
      const Pos q{p.y + kDy[a], p.x + kDx[a]};
      if (q.y < 0 || q.x < 0 || q.y >= n || q.x >= n || level.blocked(q)) continue;
      auto& dq = dist[static_cast<std::size_t>(q.y * n + q.x)];
      if (dq >= 0) continue;
      dq = d + 1;
      queue.push_back(q);
    }
  }
  return -1;
}

GridworldLevel gridworld_generate(std::uint64_t seed, const GridworldConfig& config) {
  config.validate();
  Rng rng = make_rng(seed);
  const int n = config.size;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    GridworldLevel l;
    l.size = n;
    l.obstacle.assign(static_cast<std::size_t>(n * n), 0);
    l.obstacle_squares = uniform_int(rng, config.obstacles_min, config.obstacles_max);
    for (int k = 0; k < l.obstacle_squares; ++k) {
      const int side = uniform_int(rng, config.side_min, config.side_max);
      const int y0 = uniform_int(rng, 0, n - side), x0 = uniform_int(rng, 0, n - side);
      for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) l.obstacle[static_cast<std::size_t>(y * n + x)] = 1;
    }
    std::vector<Pos> free;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (!l.blocked({y, x})) free.push_back({y, x});
    if (free.size() < 2) continue;
    const auto i = uniform_index(rng, free.size());
    auto j = uniform_index(rng, free.size() - 1);
    if (j >= i) ++j;
    l.player = free[i];
    l.goal = free[j];
    if (gridworld_distance(l) > 0) return l;
  }
  throw GenerationError("gridworld: no reachable layout after " + std::to_string(config.max_attempts) +
                        " attempts (seed " + std::to_string(seed) + ")");
}

GridworldEnv::GridworldEnv(GridworldConfig config) : config_(config) { config_.validate(); }

Observation GridworldEnv::reset(std::uint64_t seed) { return reset_level(gridworld_generate(seed, config_)); }

Observation GridworldEnv::reset_level(const GridworldLevel& level) {
  if (level.size != config_.size) throw std::invalid_argument("gridworld: level size does not match config");
  level_ = level;
  steps_ = 0;
  done_ = false;
  return observation();
}

Observation GridworldEnv::observation() const {
  const int n = level_.size;
  Observation out(nn::Shape{n, n, 1});
  for (int i = 0; i < n * n; ++i) out[i] = level_.obstacle[static_cast<std::size_t>(i)] ? kGridObstacle : 0.0f;
  out.at(level_.goal.y, level_.goal.x, 0) = kGridGoal;
  out.at(level_.player.y, level_.player.x, 0) = kGridPlayer;
  return out;
}

StepResult GridworldEnv::step(int action) {
  if (done_) throw EpisodeDoneError("gridworld: step after episode end");
  check_action(action, 4, "gridworld");
  const int n = level_.size;
  level_.player = {std::clamp(level_.player.y + kDy[action], 0, n - 1),
                   std::clamp(level_.player.x + kDx[action], 0, n - 1)};
  ++steps_;
  StepResult r;
  if (level_.player == level_.goal) {
    r.reward = 1.0;
    r.solved = true;
    r.done = true;
  } else if (level_.blocked(level_.player)) {
    r.reward = -1.0;
    r.done = true;
  } else {
    r.reward = -0.01;
  }
  r.done = r.done || steps_ >= config_.episode_cap;
  done_ = r.done;
  r.observation = observation();
  return r;
}

}  // namespace drc::env
