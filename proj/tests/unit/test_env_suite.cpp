#include "drc/data/generator.hpp"
#include "drc/data/level_set.hpp"
#include "drc/data/solver.hpp"
#include "drc/env/bandit.hpp"
#include "drc/env/boxworld.hpp"
#include "drc/env/gridworld.hpp"
#include "drc/env/minipacman.hpp"
#include "drc/env/sokoban.hpp"

#include <doctest.h>

#include <deque>
#include <set>

using namespace drc;
using namespace drc::env;

namespace {

// Two boxes off target; the first sits left of its target, player behind it.
const std::vector<std::string> kTwoBox = {
    "##########",
    "#        #",
    "# @$.    #",
    "#        #",
    "#   $.   #",
    "#        #",
    "#        #",
    "#        #",
    "#        #",
    "##########",
};

const std::vector<std::string> kLastBox = {
    "##########",
    "#        #",
    "# @$.    #",
    "#        #",
    "#   *    #",
    "#   *    #",
    "#   *    #",
    "#        #",
    "#        #",
    "##########",
};

SokobanEnv fixed_env(const SokobanLevel& level, int cap = 120) {
  return SokobanEnv([level](std::uint64_t) { return level; }, cap);
}

SokobanLevel generated(std::uint64_t seed) { return data::generate_level(seed); }

int count_diff_blocks(const Observation& a, const Observation& b) {
  std::set<std::pair<int, int>> blocks;
  for (Index y = 0; y < a.dim(0); ++y)
    for (Index x = 0; x < a.dim(1); ++x)
      for (Index c = 0; c < 3; ++c)
        if (a.at(y, x, c) != b.at(y, x, c)) blocks.insert({static_cast<int>(y / 8), static_cast<int>(x / 8)});
  return static_cast<int>(blocks.size());
}

}  // namespace

TEST_SUITE("env_suite") {

TEST_CASE("sokoban: box onto target pays 0.99") {
  auto env = fixed_env(SokobanLevel::from_rows(kTwoBox));
  env.reset(0);
  const auto r = env.step(kRight);
  CHECK(r.reward == doctest::Approx(0.99).epsilon(1e-12));
  CHECK_FALSE(r.done);
  CHECK_FALSE(r.solved);
  CHECK(env.last_events().boxes_on == 1);
}

TEST_CASE("sokoban: last box pays 10.99 and ends the episode") {
  auto env = fixed_env(SokobanLevel::from_rows(kLastBox));
  env.reset(0);
  const auto r = env.step(kRight);
  CHECK(r.reward == doctest::Approx(10.99).epsilon(1e-12));
  CHECK(r.done);
  CHECK(r.solved);
  CHECK_THROWS_AS(env.step(kNoop), EpisodeDoneError);
}

TEST_CASE("sokoban: pushing off a target costs 1") {
  auto level = SokobanLevel::from_rows(kTwoBox);
  auto env = fixed_env(level);
  env.reset(0);
  env.step(kRight);
  const auto r = env.step(kRight);
  CHECK(r.reward == doctest::Approx(-1.01).epsilon(1e-12));
}

TEST_CASE("sokoban: noop and wall bumps only advance time") {
  const auto level = SokobanLevel::from_rows(kTwoBox);
  auto env = fixed_env(level);
  env.reset(0);
  const auto r = env.step(kNoop);
  CHECK(r.reward == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(env.level() == level);
  CHECK(env.steps() == 1);
  env.step(kUp);
  const auto bump = env.step(kUp);
  CHECK(bump.reward == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(env.level().player == Pos{1, 2});
}

TEST_CASE("sokoban: two boxes cannot be pushed together") {
  auto level = SokobanLevel::from_rows({
      "##########", "#        #", "# @$$ .. #", "#        #", "#        #",
      "#        #", "#        #", "#        #", "#        #", "##########"});
  auto env = fixed_env(level);
  env.reset(0);
  env.step(kRight);
  CHECK(env.level().player == Pos{2, 2});
  CHECK(env.level() == level);
}

TEST_CASE("sokoban: episode cap is exactly 120") {
  auto env = fixed_env(SokobanLevel::from_rows(kTwoBox));
  env.reset(0);
  for (int t = 1; t < 120; ++t) CHECK_FALSE(env.step(kNoop).done);
  const auto r = env.step(kNoop);
  CHECK(r.done);
  CHECK_FALSE(r.solved);
  CHECK(env.steps() == 120);
  CHECK_THROWS_AS(env.step(kNoop), EpisodeDoneError);
}

TEST_CASE("sokoban: actions outside the set are rejected") {
  auto env = fixed_env(SokobanLevel::from_rows(kTwoBox));
  env.reset(0);
  CHECK_THROWS_AS(env.step(5), std::out_of_range);
  CHECK_THROWS_AS(env.step(-1), std::out_of_range);
}

TEST_CASE("sokoban: solved episode returns 14 - 0.01 T") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto level = data::generate_level(seed);
    const auto sol = data::solve_bfs(level, 2000000);
    REQUIRE(sol.solved());
    auto env = fixed_env(level, 100000);
    env.reset(0);
    double total = 0;
    bool removed = false;
    for (int a : sol.solution.actions) {
      total += env.step(a).reward;
      removed = removed || env.last_events().boxes_off > 0;
    }
    CHECK(env.level().solved());
    if (!removed) CHECK(total == doctest::Approx(14 - 0.01 * sol.solution.length()).epsilon(1e-9));
  }
}

TEST_CASE("sokoban: render is 80x80x3 in [0, 1]") {
  const auto obs = sokoban_render(SokobanLevel::from_rows(kTwoBox));
  CHECK(obs.shape() == nn::Shape{80, 80, 3});
  bool in_range = true;
  for (Index i = 0; i < obs.size(); ++i) in_range = in_range && obs[i] >= 0.0f && obs[i] <= 1.0f;
  CHECK(in_range);
  SokobanEnv env(generated, 120);
  CHECK(env.observation_shape() == nn::Shape{80, 80, 3});
  CHECK(env.reset(3).shape() == nn::Shape{80, 80, 3});
}

TEST_CASE("sokoban: sprites are pairwise distinct") {
  const int n = static_cast<int>(Sprite::count);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) CHECK(sprite(static_cast<Sprite>(i)) != sprite(static_cast<Sprite>(j)));
}

TEST_CASE("sokoban: moving the player changes exactly two blocks") {
  const auto level = SokobanLevel::from_rows(kTwoBox);
  auto moved = level;
  moved.player = {3, 2};
  CHECK(count_diff_blocks(sokoban_render(level), sokoban_render(moved)) == 2);
}

TEST_CASE("sokoban: render survives a text round-trip bit for bit") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    data::LevelSet set;
    set.levels.push_back({0, data::generate_level(seed)});
    const auto back = data::parse_levels(data::serialize_levels(set));
    CHECK(sokoban_render(back.levels[0].level) == sokoban_render(set.levels[0].level));
  }
}

TEST_CASE("sokoban: same seed and actions replay identically") {
  SokobanEnv a(generated, 120), b(generated, 120);
  CHECK(a.reset(11) == b.reset(11));
  Rng rng = make_rng(5);
  for (int t = 0; t < 60; ++t) {
    const int act = uniform_int(rng, 0, 4);
    const auto ra = a.step(act), rb = b.step(act);
    CHECK(ra.observation == rb.observation);
    CHECK(ra.reward == rb.reward);
  }
}

TEST_CASE("sokoban: a wrong push can make a level unsolvable") {
  bool witnessed = false;
  for (std::uint64_t seed = 0; seed < 20 && !witnessed; ++seed) {
    const auto level = data::generate_level(seed);
    // Push some box into a non-target corner: walk there with BFS and push.
    for (int a = 0; a < 4 && !witnessed; ++a) {
      auto l = level;
      Rng rng = make_rng(seed * 4 + static_cast<std::uint64_t>(a));
      for (int t = 0; t < 200; ++t) {
        sokoban_apply(l, uniform_int(rng, 0, 3));
        bool corner = false;
        for (Pos b : l.box_positions()) {
          if (l.tile(b) == Tile::target) continue;
          const bool v = l.is_wall({b.y - 1, b.x}) || l.is_wall({b.y + 1, b.x});
          const bool h = l.is_wall({b.y, b.x - 1}) || l.is_wall({b.y, b.x + 1});
          corner = corner || (v && h);
        }
        if (corner) {
          witnessed = data::solve_bfs(l, 1000000).status == data::SolveStatus::unsolvable;
          break;
        }
      }
    }
  }
  CHECK(witnessed);
}

TEST_CASE("gridworld: generated levels are reachable and obstacle counts in range") {
  GridworldConfig config;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto l = gridworld_generate(seed, config);
    CHECK(l.obstacle_squares >= 12);
    CHECK(l.obstacle_squares <= 24);
    CHECK_FALSE(l.player == l.goal);
    CHECK_FALSE(l.blocked(l.player));
    CHECK_FALSE(l.blocked(l.goal));
    CHECK(gridworld_distance(l) > 0);
  }
}

TEST_CASE("gridworld: same seed gives the same level") {
  CHECK(gridworld_generate(42) == gridworld_generate(42));
  CHECK_FALSE(gridworld_generate(42) == gridworld_generate(43));
}

TEST_CASE("gridworld: exhausted retries raise") {
  GridworldConfig config;
  config.size = 4;
  config.obstacles_min = config.obstacles_max = 1;
  config.side_min = config.side_max = 4;
  config.max_attempts = 5;
  CHECK_THROWS_AS(gridworld_generate(0, config), GenerationError);
}

TEST_CASE("gridworld: rewards for goal, obstacle and plain moves") {
  GridworldConfig config;
  config.size = 5;
  config.side_max = 2;
  GridworldEnv env(config);
  GridworldLevel l;
  l.size = 5;
  l.obstacle.assign(25, 0);
  l.obstacle[2 * 5 + 3] = 1;
  l.player = {2, 2};
  l.goal = {1, 2};

  env.reset_level(l);
  auto r = env.step(0);
  CHECK(r.reward == doctest::Approx(1.0));
  CHECK(r.done);
  CHECK(r.solved);

  env.reset_level(l);
  r = env.step(3);
  CHECK(r.reward == doctest::Approx(-1.0));
  CHECK(r.done);
  CHECK_FALSE(r.solved);
  CHECK_THROWS_AS(env.step(0), EpisodeDoneError);

  env.reset_level(l);
  r = env.step(1);
  CHECK(r.reward == doctest::Approx(-0.01));
  CHECK_FALSE(r.done);
  CHECK(env.level().player == Pos{3, 2});
}

TEST_CASE("gridworld: off-grid moves clamp") {
  GridworldConfig config;
  config.size = 5;
  config.side_max = 2;
  GridworldEnv env(config);
  GridworldLevel l;
  l.size = 5;
  l.obstacle.assign(25, 0);
  l.player = {0, 0};
  l.goal = {4, 4};
  env.reset_level(l);
  const auto r = env.step(0);
  CHECK(r.reward == doctest::Approx(-0.01));
  CHECK(env.level().player == Pos{0, 0});
}

TEST_CASE("gridworld: observation encodes obstacles, goal and player") {
  GridworldEnv env;
  const auto obs = env.reset(7);
  const auto& l = env.level();
  CHECK(obs.shape() == nn::Shape{32, 32, 1});
  CHECK(obs.at(l.player.y, l.player.x, 0) == kGridPlayer);
  CHECK(obs.at(l.goal.y, l.goal.x, 0) == kGridGoal);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (l.blocked({y, x})) CHECK(obs.at(y, x, 0) == kGridObstacle);
}

TEST_CASE("gridworld: cap ends the episode") {
  GridworldConfig config;
  config.size = 5;
  config.side_max = 2;
  config.episode_cap = 7;
  GridworldEnv env(config);
  GridworldLevel l;
  l.size = 5;
  l.obstacle.assign(25, 0);
  l.player = {0, 0};
  l.goal = {4, 4};
  env.reset_level(l);
  for (int t = 1; t < 7; ++t) CHECK_FALSE(env.step(0).done);
  CHECK(env.step(0).done);
}

TEST_CASE("boxworld: solution boxes form a chain ending in the gem") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto l = boxworld_generate(seed);
    REQUIRE(!l.solution.empty());
    CHECK(l.solution.size() <= 4u);
    CHECK(l.keys.size() == 1u);
    CHECK(l.keys[0].colour == l.boxes[static_cast<std::size_t>(l.solution[0])].lock);
    for (std::size_t i = 0; i + 1 < l.solution.size(); ++i) {
      const auto& a = l.boxes[static_cast<std::size_t>(l.solution[i])];
      const auto& b = l.boxes[static_cast<std::size_t>(l.solution[i + 1])];
      CHECK(a.content_key == b.lock);
    }
    CHECK(l.boxes[static_cast<std::size_t>(l.solution.back())].content_key == kGem);
    const std::size_t distractors = l.boxes.size() - l.solution.size();
    CHECK(distractors % 3 == 0);
    CHECK(distractors <= 6u);
    CHECK(boxworld_gem_reachable(l));
  }
}

TEST_CASE("boxworld: scripted rollout along the chain collects the gem") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto l = boxworld_generate(seed);
    const auto actions = boxworld_solution_actions(l);
    BoxworldConfig big;
    big.episode_cap = 100000;
    BoxworldEnv env(big);
    env.reset_level(l);
    double total = 0;
    bool solved = false;
    for (int a : actions) {
      const auto r = env.step(a);
      total += r.reward;
      solved = r.solved;
    }
    CHECK(solved);
    CHECK(total == doctest::Approx(10.0 + static_cast<double>(l.solution.size())));
  }
}

TEST_CASE("boxworld: opening a distractor first is a dead end") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto l = boxworld_generate(seed);
    for (std::size_t i = 0; i < l.boxes.size(); ++i) {
      const auto& b = l.boxes[i];
      if (b.on_solution || b.lock != l.keys[0].colour) continue;
      // Simulate taking the loose key and opening the distractor.
      auto m = l;
      m.keys[0].taken = true;
      m.boxes[i].opened = true;
      m.keys.push_back({b.content, b.content_key, false});
      CHECK_FALSE(boxworld_gem_reachable(m));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("boxworld: dead end through real steps") {
  // Distractor lock on the loose key's colour, reached by walking.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto l = boxworld_generate(seed);
    int target = -1;
    for (std::size_t i = 0; i < l.boxes.size(); ++i)
      if (!l.boxes[i].on_solution && l.boxes[i].lock == l.keys[0].colour) target = static_cast<int>(i);
    if (target < 0) continue;
    // Rearrange the level: the solution box becomes unreachable by key.
    BoxworldLevel m = l;
    m.player = {m.keys[0].pos.y, m.keys[0].pos.x};
    m.keys[0].taken = true;
    m.held = m.keys[0].colour;
    CHECK(boxworld_gem_reachable(m));
    m.held = kNoKey;
    m.boxes[static_cast<std::size_t>(target)].opened = true;
    CHECK_FALSE(boxworld_gem_reachable(m));
    return;
  }
  FAIL("no level with a distractor on the first key");
}

TEST_CASE("boxworld: observation layout and held key pixel") {
  BoxworldEnv env;
  const auto obs = env.reset(1);
  CHECK(obs.shape() == nn::Shape{14, 14, 3});
  const auto& l = env.level();
  const auto& pal = boxworld_palette();
  const auto& k = l.keys[0];
  for (int c = 0; c < 3; ++c) CHECK(obs.at(k.pos.y + 1, k.pos.x + 1, c) == pal[static_cast<std::size_t>(k.colour)][static_cast<std::size_t>(c)]);
  for (std::size_t i = 0; i < pal.size(); ++i)
    for (std::size_t j = i + 1; j < pal.size(); ++j) CHECK(pal[i] != pal[j]);
  // Walk to the key; the held colour then shows in the corner.
  auto actions = boxworld_solution_actions(l);
  BoxworldEnv e2;
  e2.reset_level(l);
  for (int a : actions) {
    const auto r = e2.step(a);
    if (e2.level().held != kNoKey) {
      for (int c = 0; c < 3; ++c) CHECK(r.observation.at(0, 0, c) == pal[static_cast<std::size_t>(e2.level().held)][static_cast<std::size_t>(c)]);
      break;
    }
  }
}

TEST_CASE("boxworld: determinism and cap") {
  CHECK(boxworld_generate(9) == boxworld_generate(9));
  BoxworldEnv env;
  env.reset(4);
  bool done = false;
  int t = 0;
  while (!done) {
    done = env.step(t % 4 == 0 ? 0 : 1).done;
    ++t;
  }
  CHECK(t == 120);
}

TEST_CASE("minipacman: maze is connected") {
  const auto& maze = minipacman_maze();
  REQUIRE(maze.size() == static_cast<std::size_t>(kPacmanRows));
  int open = 0;
  for (const auto& row : maze) {
    REQUIRE(row.size() == static_cast<std::size_t>(kPacmanCols));
    for (char c : row) open += c != '#';
  }
  std::set<Pos> seen{kPacmanStart};
  std::deque<Pos> q{kPacmanStart};
  while (!q.empty()) {
    const Pos p = q.front();
    q.pop_front();
    for (int a = 0; a < 4; ++a) {
      const Pos r{p.y + kDy[a], p.x + kDx[a]};
      if (maze[static_cast<std::size_t>(r.y)][static_cast<std::size_t>(r.x)] == '#' || seen.count(r)) continue;
      seen.insert(r);
      q.push_back(r);
    }
  }
  CHECK(static_cast<int>(seen.size()) == open);
}

TEST_CASE("minipacman: eating food pays 1") {
  MiniPacmanConfig config;
  config.ghosts = 0;
  MiniPacmanEnv env(config);
  env.reset(0);
  auto& s = env.mutable_state();
  std::fill(s.pill.begin(), s.pill.end(), 0);
  const auto r = env.step(2);  // left onto food
  CHECK(r.reward == doctest::Approx(1.0));
  CHECK(env.state().player == Pos{7, 8});
  const auto again = env.step(3);  // back to the eaten start cell
  CHECK(again.reward == doctest::Approx(0.0));
}

TEST_CASE("minipacman: pill then edible ghost pays 2 then 5 and respawns it") {
  MiniPacmanConfig config;
  config.ghosts = 1;
  config.ghost_move_probability = 0;
  MiniPacmanEnv env(config);
  env.reset(0);
  auto& s = env.mutable_state();
  std::fill(s.pill.begin(), s.pill.end(), 0);
  std::fill(s.food.begin(), s.food.end(), 0);
  s.food[0] = 1;  // keep the level from being cleared (a wall cell, never eaten)
  s.pill[7 * kPacmanCols + 8] = 1;
  s.ghosts[0] = {{7, 7}, -1, 0};
  auto r = env.step(2);
  CHECK(r.reward == doctest::Approx(2.0));
  CHECK(env.state().ghosts[0].edible > 0);
  r = env.step(2);
  CHECK(r.reward == doctest::Approx(5.0));
  CHECK_FALSE(r.done);
  CHECK_FALSE(env.state().ghosts[0].pos == Pos{7, 7});
  CHECK(env.state().ghosts[0].edible == 0);
}

TEST_CASE("minipacman: touching a dangerous ghost ends the episode") {
  MiniPacmanConfig config;
  config.ghosts = 1;
  config.ghost_move_probability = 0;
  MiniPacmanEnv env(config);
  env.reset(0);
  env.mutable_state().ghosts[0] = {{7, 8}, -1, 0};
  const auto r = env.step(2);
  CHECK(r.done);
  CHECK_THROWS_AS(env.step(4), EpisodeDoneError);
}

TEST_CASE("minipacman: without ghost moves identical steps give identical states") {
  MiniPacmanConfig config;
  config.ghost_move_probability = 0;
  MiniPacmanEnv a(config);
  a.reset(3);
  auto b_ptr = a.clone();
  auto& b = dynamic_cast<MiniPacmanEnv&>(*b_ptr);
  const auto ghosts = a.state().ghosts;
  for (int action : {2, 2, 4, 3}) {
    const auto ra = a.step(action), rb = b.step(action);
    CHECK(a.state() == b.state());
    CHECK(ra.observation == rb.observation);
  }
  for (std::size_t i = 0; i < ghosts.size(); ++i) CHECK(a.state().ghosts[i].pos == ghosts[i].pos);
}

TEST_CASE("minipacman: clearing all food repopulates the level") {
  MiniPacmanConfig config;
  config.ghosts = 0;
  MiniPacmanEnv env(config);
  env.reset(0);
  auto& s = env.mutable_state();
  std::fill(s.pill.begin(), s.pill.end(), 0);
  std::fill(s.food.begin(), s.food.end(), 0);
  s.food[7 * kPacmanCols + 8] = 1;
  const auto r = env.step(2);
  CHECK(r.reward == doctest::Approx(1.0));
  CHECK_FALSE(r.done);
  CHECK(env.state().levels_cleared == 1);
  CHECK(env.food_left() > 100);
}

TEST_CASE("minipacman: determinism, colours and cap") {
  MiniPacmanEnv a, b;
  CHECK(a.reset(8) == b.reset(8));
  for (int t = 0; t < 50 && !a.done(); ++t) {
    const auto ra = a.step(t % 5), rb = b.step(t % 5);
    CHECK(ra.observation == rb.observation);
  }
  const std::vector<std::array<float, 3>> colours = {pacman_colour::wall, pacman_colour::food, pacman_colour::pill,
                                                     pacman_colour::player, pacman_colour::ghost, pacman_colour::edible,
                                                     pacman_colour::fading};
  for (std::size_t i = 0; i < colours.size(); ++i)
    for (std::size_t j = i + 1; j < colours.size(); ++j) CHECK(colours[i] != colours[j]);

  MiniPacmanConfig config;
  config.ghosts = 0;
  config.episode_cap = 30;
  MiniPacmanEnv env(config);
  env.reset(0);
  int t = 0;
  while (!env.step(4).done) ++t;
  CHECK(t + 1 == 30);
}

TEST_CASE("bandit: pays on the matching action") {
  BanditEnv env;
  int seen[2] = {0, 0};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto obs = env.reset(seed);
    const int s = env.state();
    ++seen[s];
    CHECK(obs.data()[0] == (s == 1 ? 1.0f : -1.0f));
    const auto r = env.step(s);
    CHECK(r.reward == 1.0);
    CHECK(r.done);
  }
  CHECK(seen[0] > 0);
  CHECK(seen[1] > 0);
}

}  // TEST_SUITE
