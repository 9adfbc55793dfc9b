#include "drc/env/minipacman.hpp"

#include <cstdlib>

namespace drc::env {

void MiniPacmanConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("minipacman config: " + m); };
  if (ghosts < 0 || pills < 0) fail("ghost and pill counts must be >= 0");
  if (ghost_move_probability < 0 || ghost_move_probability > 1) fail("ghost_move_probability must be in [0, 1]");
  if (edible_steps < 0 || fade_steps < 0) fail("edible durations must be >= 0");
  if (episode_cap <= 0) fail("episode cap must be > 0");
}

const std::vector<std::string>& minipacman_maze() {
  static const std::vector<std::string> maze = {
      "###################",
      "#........#........#",
      "#.##.###.#.###.##.#",
      "#.................#",
      "#.##.#.#####.#.##.#",
      "#....#...#...#....#",
      "####.###.#.###.####",
      "#.................#",
      "####.#.#####.#.####",
      "#....#...#...#....#",
      "#.##.###.#.###.##.#",
      "#...#.........#...#",
      "###.#.#.###.#.#.###",
      "#.....#.....#.....#",
      "###################",
  };
  return maze;
}

namespace {

bool wall(Pos p) {
  if (p.y < 0 || p.x < 0 || p.y >= kPacmanRows || p.x >= kPacmanCols) return true;
  return minipacman_maze()[static_cast<std::size_t>(p.y)][static_cast<std::size_t>(p.x)] == '#';
}

std::size_t cell(Pos p) { return static_cast<std::size_t>(p.y * kPacmanCols + p.x); }

int manhattan(Pos a, Pos b) { return std::abs(a.y - b.y) + std::abs(a.x - b.x); }

constexpr int kReverse[4] = {1, 0, 3, 2};

}  // namespace

MiniPacmanEnv::MiniPacmanEnv(MiniPacmanConfig config) : config_(config) { config_.validate(); }

int MiniPacmanEnv::food_left() const {
  int n = 0;
  for (std::size_t i = 0; i < state_.food.size(); ++i) n += state_.food[i] + state_.pill[i];
  return n;
}

// Food on every corridor cell; pills and ghosts at random positions.
void MiniPacmanEnv::populate_level() {
  state_.food.assign(static_cast<std::size_t>(kPacmanRows * kPacmanCols), 0);
  state_.pill.assign(state_.food.size(), 0);
  std::vector<Pos> open;
  for (int y = 0; y < kPacmanRows; ++y)
    for (int x = 0; x < kPacmanCols; ++x)
      if (!wall({y, x}) && !(Pos{y, x} == state_.player)) {
        state_.food[cell({y, x})] = 1;
        open.push_back({y, x});
      }
  shuffle(rng_, std::span<Pos>(open));
  std::size_t next = 0;
  for (int i = 0; i < config_.pills && next < open.size(); ++i, ++next) {
    state_.food[cell(open[next])] = 0;
    state_.pill[cell(open[next])] = 1;
  }
  state_.ghosts.clear();
  for (std::size_t i = next; i < open.size() && static_cast<int>(state_.ghosts.size()) < config_.ghosts; ++i) {
    if (manhattan(open[i], state_.player) < 6) continue;
    state_.ghosts.push_back({open[i], -1, 0});
  }
}

Observation MiniPacmanEnv::reset(std::uint64_t seed) {
  rng_ = make_rng(seed);
  state_ = MiniPacmanState{};
  populate_level();
  steps_ = 0;
  done_ = false;
  return observation();
}

void MiniPacmanEnv::move_ghost(Ghost& g) {
  int options[4], count = 0;
  for (int a = 0; a < 4; ++a)
    if (!wall({g.pos.y + kDy[a], g.pos.x + kDx[a]})) options[count++] = a;
  if (count == 0) return;
  // Reversing is allowed only at dead ends.
  if (count > 1 && g.heading >= 0) {
    int kept = 0;
    for (int i = 0; i < count; ++i)
      if (options[i] != kReverse[g.heading]) options[kept++] = options[i];
    count = kept;
  }
  const bool flee = g.edible > 0;
  int best[4], nbest = 0, best_score = 0;
  for (int i = 0; i < count; ++i) {
    const int a = options[i];
    const int d = manhattan({g.pos.y + kDy[a], g.pos.x + kDx[a]}, state_.player);
    const int score = flee ? d : -d;
    if (nbest == 0 || score > best_score) {
      best_score = score;
      nbest = 0;
    }
    if (score == best_score) best[nbest++] = a;
  }
  const int a = nbest == 1 ? best[0] : best[uniform_index(rng_, static_cast<std::uint64_t>(nbest))];
  g.pos = {g.pos.y + kDy[a], g.pos.x + kDx[a]};
  g.heading = a;
}

// A player stepping into a ghost and a ghost stepping into the player both
// end up on the same cell, so same-cell contact covers crossings.
double MiniPacmanEnv::resolve_contacts(bool& eaten) {
  double reward = 0;
  for (Ghost& g : state_.ghosts) {
    if (!(g.pos == state_.player)) continue;
    if (g.edible > 0) {
      reward += kPacmanGhost;
      // Respawn at the open cell farthest from the player (first in scan order on ties).
      Pos far = g.pos;
      int best = -1;
      for (int y = 0; y < kPacmanRows; ++y)
        for (int x = 0; x < kPacmanCols; ++x)
          if (!wall({y, x}) && manhattan({y, x}, state_.player) > best) {
            best = manhattan({y, x}, state_.player);
            far = {y, x};
          }
      g = {far, -1, 0};
    } else {
      eaten = true;
    }
  }
  return reward;
}

StepResult MiniPacmanEnv::step(int action) {
  if (done_) throw EpisodeDoneError("minipacman: step after episode end");
  check_action(action, 5, "minipacman");
  StepResult r;
  const Pos before = state_.player;
  if (action != kPacmanStay) {
    const Pos q{before.y + kDy[action], before.x + kDx[action]};
    if (!wall(q)) state_.player = q;
  }
  const std::size_t here = cell(state_.player);
  if (state_.food[here]) {
    state_.food[here] = 0;
    r.reward += kPacmanFood;
  }
  if (state_.pill[here]) {
    state_.pill[here] = 0;
    r.reward += kPacmanPill;
    for (auto& g : state_.ghosts) g.edible = config_.edible_steps;
  }
  bool eaten = false;
  r.reward += resolve_contacts(eaten);
  if (!eaten) {
    for (auto& g : state_.ghosts)
      if (uniform01(rng_) < config_.ghost_move_probability) move_ghost(g);
    r.reward += resolve_contacts(eaten);
  }
  for (auto& g : state_.ghosts)
    if (g.edible > 0) --g.edible;
  if (!eaten && food_left() == 0) {
    ++state_.levels_cleared;
    populate_level();
  }
  ++steps_;
  r.done = eaten || steps_ >= config_.episode_cap;
  done_ = r.done;
  r.observation = observation();
  return r;
}

Observation MiniPacmanEnv::observation() const {
  Observation out(nn::Shape{kPacmanRows, kPacmanCols, 3});
  auto put = [&](Pos p, const std::array<float, 3>& c) {
    for (int k = 0; k < 3; ++k) out.at(p.y, p.x, k) = c[static_cast<std::size_t>(k)];
  };
  for (int y = 0; y < kPacmanRows; ++y)
    for (int x = 0; x < kPacmanCols; ++x) {
      const Pos p{y, x};
      if (wall(p)) put(p, pacman_colour::wall);
      else if (state_.pill[cell(p)]) put(p, pacman_colour::pill);
      else if (state_.food[cell(p)]) put(p, pacman_colour::food);
    }
  put(state_.player, pacman_colour::player);
  for (const auto& g : state_.ghosts) {
    if (g.edible == 0) put(g.pos, pacman_colour::ghost);
    else if (g.edible <= config_.fade_steps) put(g.pos, pacman_colour::fading);
    else put(g.pos, pacman_colour::edible);
  }
  return out;
}

}  // namespace drc::env
