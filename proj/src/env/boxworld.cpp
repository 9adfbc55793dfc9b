#include "drc/env/boxworld.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace drc::env {

void BoxworldConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("boxworld config: " + m); };
  if (room < 6) fail("room must be >= 6");
  if (branch_length < 1) fail("branch_length must be >= 1");
  if (min_solution_length < 1 || max_solution_length < min_solution_length) fail("bad solution length range");
  if (max_distractors < 0) fail("max_distractors must be >= 0");
  if (episode_cap <= 0) fail("episode cap must be > 0");
  const int colours = max_solution_length + max_distractors * branch_length;
  if (colours > static_cast<int>(boxworld_palette().size())) fail("not enough key colours for this configuration");
}

const std::vector<std::array<float, 3>>& boxworld_palette() {
  static const std::vector<std::array<float, 3>> palette = {
      {0.9f, 0.1f, 0.1f},  {0.1f, 0.7f, 0.1f},  {0.1f, 0.2f, 0.9f},  {0.95f, 0.85f, 0.1f},
      {0.8f, 0.1f, 0.8f},  {0.1f, 0.8f, 0.8f},  {0.95f, 0.5f, 0.1f}, {0.5f, 0.25f, 0.05f},
      {0.5f, 0.9f, 0.5f},  {0.55f, 0.55f, 1.0f}, {1.0f, 0.6f, 0.7f},  {0.4f, 0.0f, 0.5f},
      {0.0f, 0.4f, 0.4f},  {0.6f, 0.6f, 0.0f},  {0.0f, 0.0f, 0.45f}, {0.45f, 0.0f, 0.0f},
  };
  return palette;
}

namespace {

constexpr std::array<float, 3> kBackground{0.86f, 0.86f, 0.86f};
constexpr std::array<float, 3> kBorder{0.0f, 0.0f, 0.0f};
constexpr std::array<float, 3> kPlayer{0.3f, 0.3f, 0.3f};
constexpr std::array<float, 3> kGemColour{1.0f, 1.0f, 1.0f};

enum class Occ : std::uint8_t { empty, key, gem, content, lock };

struct Occupancy {
  int room;
  std::vector<Occ> kind;
  std::vector<int> ref;  // box index for content/lock, key index for key

  Occ at(Pos p) const { return kind[static_cast<std::size_t>(p.y * room + p.x)]; }
  int ref_at(Pos p) const { return ref[static_cast<std::size_t>(p.y * room + p.x)]; }
};

Occupancy occupancy(const BoxworldLevel& l) {
  Occupancy o{l.room, std::vector<Occ>(static_cast<std::size_t>(l.room * l.room), Occ::empty),
              std::vector<int>(static_cast<std::size_t>(l.room * l.room), -1)};
  auto set = [&](Pos p, Occ k, int r) {
    o.kind[static_cast<std::size_t>(p.y * l.room + p.x)] = k;
    o.ref[static_cast<std::size_t>(p.y * l.room + p.x)] = r;
  };
  for (std::size_t i = 0; i < l.boxes.size(); ++i) {
    const auto& b = l.boxes[i];
    if (b.opened) continue;
    set(b.content, Occ::content, static_cast<int>(i));
    set(b.lock_pos(), Occ::lock, static_cast<int>(i));
  }
  for (std::size_t i = 0; i < l.keys.size(); ++i) {
    if (!l.keys[i].taken) set(l.keys[i].pos, Occ::key, static_cast<int>(i));
  }
  if (l.gem_released && !l.gem_taken) {
    const auto& g = l.boxes[static_cast<std::size_t>(l.solution.back())];
    set(g.content, Occ::gem, -1);
  }
  return o;
}

bool in_room(Pos p, int room) { return p.y >= 0 && p.x >= 0 && p.y < room && p.x < room; }

// Layout check: empty cells connected, every lock and the loose key touch one.
bool layout_ok(const BoxworldLevel& l) {
  const Occupancy o = occupancy(l);
  const int n = l.room;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n * n), 0);
  std::deque<Pos> q{l.player};
  seen[static_cast<std::size_t>(l.player.y * n + l.player.x)] = 1;
  int reached = 1, empty = 0;
  for (Occ k : o.kind) empty += k == Occ::empty;
  while (!q.empty()) {
    const Pos p = q.front();
    q.pop_front();
    for (int a = 0; a < 4; ++a) {
      const Pos r{p.y + kDy[a], p.x + kDx[a]};
      if (!in_room(r, n) || o.at(r) != Occ::empty || seen[static_cast<std::size_t>(r.y * n + r.x)]) continue;
      seen[static_cast<std::size_t>(r.y * n + r.x)] = 1;
      ++reached;
      q.push_back(r);
    }
  }
  if (reached != empty) return false;
  auto touches_empty = [&](Pos p) {
    for (int a = 0; a < 4; ++a) {
      const Pos r{p.y + kDy[a], p.x + kDx[a]};
      if (in_room(r, n) && o.at(r) == Occ::empty) return true;
    }
    return false;
  };
  for (const auto& b : l.boxes)
    if (!touches_empty(b.lock_pos())) return false;
  for (const auto& k : l.keys)
    if (!touches_empty(k.pos)) return false;
  return true;
}

}  // namespace

BoxworldLevel boxworld_generate(std::uint64_t seed, const BoxworldConfig& config) {
  config.validate();
  Rng rng = make_rng(seed);
  const int n = config.room;

  // Key graph: a chain of solution boxes ending in the gem, with distractor
  // branches hanging off solution keys. Each colour opens exactly one box on
  // its branch; a distractor consumes the key its solution box needs.
  const int length = uniform_int(rng, config.min_solution_length, config.max_solution_length);
  const int distractors = uniform_int(rng, 0, config.max_distractors);
  std::vector<int> colours(boxworld_palette().size());
  for (std::size_t i = 0; i < colours.size(); ++i) colours[i] = static_cast<int>(i);
  shuffle(rng, std::span<int>(colours));
  std::size_t next_colour = 0;

  BoxworldLevel base;
  base.room = n;
  std::vector<int> chain;
  for (int i = 0; i < length; ++i) chain.push_back(colours[next_colour++]);
  for (int i = 0; i < length; ++i) {
    BoxworldBox b;
    b.lock = chain[static_cast<std::size_t>(i)];
    b.content_key = i + 1 < length ? chain[static_cast<std::size_t>(i + 1)] : kGem;
    b.on_solution = true;
    base.solution.push_back(static_cast<int>(base.boxes.size()));
    base.boxes.push_back(b);
  }
  for (int d = 0; d < distractors; ++d) {
    int key = chain[uniform_index(rng, chain.size())];
    for (int j = 0; j < config.branch_length; ++j) {
      BoxworldBox b;
      b.lock = key;
      b.content_key = colours[next_colour++];
      key = b.content_key;
      base.boxes.push_back(b);
    }
  }

  for (int attempt = 0;; ++attempt) {
    if (attempt > 10000) throw std::runtime_error("boxworld: layout placement failed");
    BoxworldLevel l = base;
    std::vector<std::uint8_t> used(static_cast<std::size_t>(n * n), 0);
    auto free_cell = [&](int y, int x) { return in_room({y, x}, n) && !used[static_cast<std::size_t>(y * n + x)]; };
    bool ok = true;
    for (auto& b : l.boxes) {
      bool placed = false;
      for (int tries = 0; tries < 200 && !placed; ++tries) {
        const int y = uniform_int(rng, 0, n - 1), x = uniform_int(rng, 0, n - 2);
        // Keep a gap left and right so adjacent boxes never read as one.
        if (!free_cell(y, x) || !free_cell(y, x + 1)) continue;
        if ((x > 0 && !free_cell(y, x - 1)) || (x + 2 < n && !free_cell(y, x + 2))) continue;
        used[static_cast<std::size_t>(y * n + x)] = used[static_cast<std::size_t>(y * n + x + 1)] = 1;
        b.content = {y, x};
        placed = true;
      }
      ok = ok && placed;
    }
    auto take_single = [&](Pos& out) {
      for (int tries = 0; tries < 200; ++tries) {
        const int y = uniform_int(rng, 0, n - 1), x = uniform_int(rng, 0, n - 1);
        if (!free_cell(y, x)) continue;
        used[static_cast<std::size_t>(y * n + x)] = 1;
        out = {y, x};
        return true;
      }
      return false;
    };
    BoxworldLevel::LooseKey k;
    k.colour = chain.front();
    ok = ok && take_single(k.pos) && take_single(l.player);
    l.keys.push_back(k);
    if (ok && layout_ok(l)) return l;
  }
}

bool boxworld_gem_reachable(const BoxworldLevel& level) {
  if (level.gem_released) return true;
  std::vector<std::uint8_t> opened(level.boxes.size());
  for (std::size_t i = 0; i < level.boxes.size(); ++i) opened[i] = level.boxes[i].opened;
  std::function<bool(int)> reach = [&](int key) {
    for (std::size_t i = 0; i < level.boxes.size(); ++i) {
      const auto& b = level.boxes[i];
      if (opened[i] || b.lock != key) continue;
      if (b.content_key == kGem) return true;
      opened[i] = 1;
      const bool r = reach(b.content_key);
      opened[i] = 0;
      if (r) return true;
    }
    return false;
  };
  if (level.held != kNoKey) return reach(level.held);
  for (const auto& k : level.keys)
    if (!k.taken && reach(k.colour)) return true;
  return false;
}

namespace {

// Actions walking over empty cells to a cell adjacent to `target`, then
// stepping into it. Empty when no route exists.
std::vector<int> route_into(const BoxworldLevel& l, Pos target) {
  const Occupancy o = occupancy(l);
  const int n = l.room;
  std::vector<int> parent(static_cast<std::size_t>(n * n), -2);
  std::deque<Pos> q{l.player};
  parent[static_cast<std::size_t>(l.player.y * n + l.player.x)] = -1;
  while (!q.empty()) {
    const Pos p = q.front();
    q.pop_front();
    for (int a = 0; a < 4; ++a) {
      const Pos r{p.y + kDy[a], p.x + kDx[a]};
      if (r == target) {
        std::vector<int> actions{a};
        Pos c = p;
        while (parent[static_cast<std::size_t>(c.y * n + c.x)] >= 0) {
          const int pa = parent[static_cast<std::size_t>(c.y * n + c.x)];
          actions.push_back(pa);
          c = {c.y - kDy[pa], c.x - kDx[pa]};
        }
        std::reverse(actions.begin(), actions.end());
        return actions;
      }
      if (!in_room(r, n) || o.at(r) != Occ::empty || parent[static_cast<std::size_t>(r.y * n + r.x)] != -2) continue;
      parent[static_cast<std::size_t>(r.y * n + r.x)] = a;
      q.push_back(r);
    }
  }
  return {};
}

}  // namespace

std::vector<int> boxworld_solution_actions(const BoxworldLevel& start) {
  BoxworldEnv env(BoxworldConfig{start.room, 3, 4, 1, 0, 100000});
  env.reset_level(start);
  std::vector<int> all;
  auto follow = [&](Pos target) {
    const auto actions = route_into(env.level(), target);
    for (int a : actions) {
      all.push_back(a);
      env.step(a);
    }
    return !actions.empty();
  };
  if (start.held == kNoKey) {
    for (const auto& k : start.keys)
      if (!k.taken && k.colour == start.boxes[static_cast<std::size_t>(start.solution.front())].lock) follow(k.pos);
  }
  for (int idx : start.solution) {
    const auto& b = start.boxes[static_cast<std::size_t>(idx)];
    if (b.opened) continue;
    if (!follow(b.lock_pos())) return all;
    if (!follow(b.content)) return all;  // pick up the released key or gem
  }
  return all;
}

BoxworldEnv::BoxworldEnv(BoxworldConfig config) : config_(config) {
  if (config_.episode_cap <= 0) throw std::invalid_argument("boxworld config: episode cap must be > 0");
}

Observation BoxworldEnv::reset(std::uint64_t seed) { return reset_level(boxworld_generate(seed, config_)); }

Observation BoxworldEnv::reset_level(const BoxworldLevel& level) {
  if (level.room != config_.room) throw std::invalid_argument("boxworld: level size does not match config");
  level_ = level;
  steps_ = 0;
  done_ = false;
  return observation();
}

Observation BoxworldEnv::observation() const {
  const int n = config_.room + 2;
  Observation out(nn::Shape{n, n, 3});
  auto put = [&](int y, int x, const std::array<float, 3>& c) {
    for (int k = 0; k < 3; ++k) out.at(y, x, k) = c[static_cast<std::size_t>(k)];
  };
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) put(y, x, (y == 0 || x == 0 || y == n - 1 || x == n - 1) ? kBorder : kBackground);
  const auto& pal = boxworld_palette();
  const Occupancy o = occupancy(level_);
  for (int y = 0; y < level_.room; ++y) {
    for (int x = 0; x < level_.room; ++x) {
      const Pos p{y, x};
      switch (o.at(p)) {
        case Occ::empty: break;
        case Occ::gem: put(y + 1, x + 1, kGemColour); break;
        case Occ::key: put(y + 1, x + 1, pal[static_cast<std::size_t>(level_.keys[static_cast<std::size_t>(o.ref_at(p))].colour)]); break;
        case Occ::lock: put(y + 1, x + 1, pal[static_cast<std::size_t>(level_.boxes[static_cast<std::size_t>(o.ref_at(p))].lock)]); break;
        case Occ::content: {
          const int c = level_.boxes[static_cast<std::size_t>(o.ref_at(p))].content_key;
          put(y + 1, x + 1, c == kGem ? kGemColour : pal[static_cast<std::size_t>(c)]);
          break;
        }
      }
    }
  }
  put(level_.player.y + 1, level_.player.x + 1, kPlayer);
  if (level_.held != kNoKey) put(0, 0, pal[static_cast<std::size_t>(level_.held)]);
  return out;
}

StepResult BoxworldEnv::step(int action) {
  if (done_) throw EpisodeDoneError("boxworld: step after episode end");
  check_action(action, 4, "boxworld");
  StepResult r;
  const Pos q{level_.player.y + kDy[action], level_.player.x + kDx[action]};
  if (in_room(q, level_.room)) {
    const Occupancy o = occupancy(level_);
    switch (o.at(q)) {
      case Occ::empty:
        level_.player = q;
        break;
      case Occ::key:
        if (level_.held == kNoKey) {
          auto& k = level_.keys[static_cast<std::size_t>(o.ref_at(q))];
          k.taken = true;
          level_.held = k.colour;
          level_.player = q;
        }
        break;
      case Occ::gem:
        level_.gem_taken = true;
        level_.player = q;
        r.reward += kBoxworldGem;
        r.solved = true;
        break;
      case Occ::lock: {
        auto& b = level_.boxes[static_cast<std::size_t>(o.ref_at(q))];
        if (level_.held == b.lock) {
          b.opened = true;
          level_.held = kNoKey;
          level_.player = q;
          r.reward += b.on_solution ? kBoxworldCorrectBox : kBoxworldDistractorBox;
          if (b.content_key == kGem) {
            level_.gem_released = true;
          } else {
            level_.keys.push_back({b.content, b.content_key, false});
          }
        }
        break;
      }
      case Occ::content:
        break;
    }
  }
  ++steps_;
  r.done = r.solved || steps_ >= config_.episode_cap;
  done_ = r.done;
  r.observation = observation();
  return r;
}

}  // namespace drc::env
