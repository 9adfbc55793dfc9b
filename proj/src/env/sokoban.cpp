#include "drc/env/sokoban.hpp"

#include <algorithm>

namespace drc::env {

SokobanLevel SokobanLevel::empty(int height, int width) {
  SokobanLevel l;
  l.height = height;
  l.width = width;
  l.tiles.assign(static_cast<std::size_t>(height * width), Tile::wall);
  l.boxes.assign(static_cast<std::size_t>(height * width), 0);
  return l;
}

int SokobanLevel::box_count() const { return static_cast<int>(std::count(boxes.begin(), boxes.end(), 1)); }

int SokobanLevel::target_count() const {
  return static_cast<int>(std::count(tiles.begin(), tiles.end(), Tile::target));
}

int SokobanLevel::boxes_on_target() const {
  int n = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) n += boxes[i] && tiles[i] == Tile::target;
  return n;
}

std::vector<Pos> SokobanLevel::box_positions() const {
  std::vector<Pos> out;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (has_box({y, x})) out.push_back({y, x});
  return out;
}

std::vector<std::string> SokobanLevel::to_rows() const {
  std::vector<std::string> rows;
  for (int y = 0; y < height; ++y) {
    std::string row;
    for (int x = 0; x < width; ++x) {
      const Pos p{y, x};
      const bool target = tile(p) == Tile::target;
      char c = ' ';
      if (tile(p) == Tile::wall) {
        c = '#';
      } else if (has_box(p)) {
        c = target ? '*' : '$';
      } else if (player == p) {
        c = target ? '+' : '@';
      } else if (target) {
        c = '.';
      }
      row += c;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SokobanLevel SokobanLevel::from_rows(const std::vector<std::string>& rows) {
  if (rows.empty()) throw LevelError("level has no rows");
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.front().size());
  SokobanLevel l = empty(h, w);
  int players = 0;
  for (int y = 0; y < h; ++y) {
    if (static_cast<int>(rows[static_cast<std::size_t>(y)].size()) != w) {
      throw LevelError("row " + std::to_string(y) + " has width " + std::to_string(rows[static_cast<std::size_t>(y)].size()) +
                       ", expected " + std::to_string(w));
    }
    for (int x = 0; x < w; ++x) {
      const char c = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      const auto i = static_cast<std::size_t>(y * w + x);
      switch (c) {
        case '#': l.tiles[i] = Tile::wall; break;
        case ' ': l.tiles[i] = Tile::floor; break;
        case '.': l.tiles[i] = Tile::target; break;
        case '$': l.tiles[i] = Tile::floor; l.boxes[i] = 1; break;
        case '*': l.tiles[i] = Tile::target; l.boxes[i] = 1; break;
        case '@': l.tiles[i] = Tile::floor; l.player = {y, x}; ++players; break;
        case '+': l.tiles[i] = Tile::target; l.player = {y, x}; ++players; break;
        default:
          throw LevelError("row " + std::to_string(y) + ", column " + std::to_string(x) + ": invalid character '" +
                           std::string(1, c) + "'");
      }
    }
  }
  if (players != 1) throw LevelError("level has " + std::to_string(players) + " players, expected 1");
  return l;
}

void SokobanLevel::validate(int expected_boxes) const {
  const auto cells = static_cast<std::size_t>(height * width);
  if (height < 3 || width < 3 || tiles.size() != cells || boxes.size() != cells) {
    throw LevelError("level storage does not match its " + std::to_string(height) + "x" + std::to_string(width) + " size");
  }
  if (!inside(player) || tile(player) == Tile::wall) throw LevelError("player is not on a floor cell");
  if (has_box(player)) throw LevelError("player overlaps a box");
  for (std::size_t i = 0; i < cells; ++i) {
    if (boxes[i] > 1) throw LevelError("box flag out of range");
    if (boxes[i] && tiles[i] == Tile::wall) throw LevelError("box inside a wall");
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if ((y == 0 || x == 0 || y == height - 1 || x == width - 1) && tile({y, x}) != Tile::wall) {
        throw LevelError("border cell (" + std::to_string(y) + ", " + std::to_string(x) + ") is not a wall");
      }
  const int b = box_count(), t = target_count();
  if (b != t) throw LevelError(std::to_string(t) + " targets but " + std::to_string(b) + " boxes");
  if (expected_boxes >= 0 && b != expected_boxes) {
    throw LevelError(std::to_string(b) + " boxes, expected " + std::to_string(expected_boxes));
  }
}

SokobanEvents sokoban_apply(SokobanLevel& level, int action) {
  check_action(action, kSokobanActions, "sokoban");
  SokobanEvents ev;
  if (action == kNoop) return ev;
  const Pos next{level.player.y + kDy[action], level.player.x + kDx[action]};
  if (level.is_wall(next)) return ev;
  if (level.has_box(next)) {
    const Pos beyond{next.y + kDy[action], next.x + kDx[action]};
    if (level.is_wall(beyond) || level.has_box(beyond)) return ev;
    level.boxes[static_cast<std::size_t>(level.index(next))] = 0;
    level.boxes[static_cast<std::size_t>(level.index(beyond))] = 1;
    const bool from_target = level.tile(next) == Tile::target;
    const bool to_target = level.tile(beyond) == Tile::target;
    if (to_target && !from_target) ev.boxes_on = 1;
    if (from_target && !to_target) ev.boxes_off = 1;
    ev.completed = to_target && level.solved();
  }
  level.player = next;
  ev.moved = true;
  return ev;
}

double sokoban_reward(const SokobanEvents& e) {
  return kSokobanStepCost + kSokobanBoxOn * e.boxes_on + kSokobanBoxOff * e.boxes_off +
         (e.completed ? kSokobanComplete : 0.0);
}

namespace {

using Rgb = std::array<float, 3>;

std::array<SpriteImage, static_cast<std::size_t>(Sprite::count)> build_sprites() {
  auto fill = [](SpriteImage& img, auto&& color_at) {
    for (int y = 0; y < kSpriteSize; ++y)
      for (int x = 0; x < kSpriteSize; ++x) {
        const Rgb c = color_at(y, x);
        for (int k = 0; k < 3; ++k) img[static_cast<std::size_t>((y * kSpriteSize + x) * 3 + k)] = c[k];
      }
  };
  const Rgb black{0, 0, 0};
  const Rgb brick{0.6f, 0.3f, 0.15f}, mortar{0.35f, 0.35f, 0.35f};
  const Rgb ring{0.9f, 0.2f, 0.2f};
  const Rgb crate{0.85f, 0.65f, 0.2f}, crate_edge{0.45f, 0.3f, 0.1f};
  const Rgb placed{0.3f, 0.85f, 0.3f};
  const Rgb body{0.3f, 0.55f, 1.0f};

  auto is_ring = [](int y, int x) {
    const bool in = y >= 2 && y <= 5 && x >= 2 && x <= 5;
    const bool core = y >= 3 && y <= 4 && x >= 3 && x <= 4;
    return in && !core;
  };
  auto is_edge = [](int y, int x) { return y == 0 || x == 0 || y == kSpriteSize - 1 || x == kSpriteSize - 1; };
  auto is_body = [](int y, int x) {
    const int dy = 2 * y - 7, dx = 2 * x - 7;  // centered disc of radius ~3
    return dy * dy + dx * dx <= 36;
  };

  std::array<SpriteImage, static_cast<std::size_t>(Sprite::count)> s{};
  fill(s[static_cast<int>(Sprite::wall)], [&](int y, int x) {
    const bool joint = y % 4 == 3 || (x + (y / 4) * 4) % 8 == 7;
    return joint ? mortar : brick;
  });
  fill(s[static_cast<int>(Sprite::floor)], [&](int, int) { return black; });
  fill(s[static_cast<int>(Sprite::target)], [&](int y, int x) { return is_ring(y, x) ? ring : black; });
  fill(s[static_cast<int>(Sprite::box)], [&](int y, int x) { return is_edge(y, x) ? crate_edge : crate; });
  fill(s[static_cast<int>(Sprite::box_on_target)], [&](int y, int x) { return is_edge(y, x) ? crate_edge : placed; });
  fill(s[static_cast<int>(Sprite::player)], [&](int y, int x) { return is_body(y, x) ? body : black; });
  fill(s[static_cast<int>(Sprite::player_on_target)], [&](int y, int x) {
    if (y >= 3 && y <= 4 && x >= 3 && x <= 4) return body;
    if (is_ring(y, x)) return ring;
    return is_body(y, x) ? body : black;
  });
  return s;
}

}  // namespace

const SpriteImage& sprite(Sprite s) {
  static const auto sprites = build_sprites();
  return sprites.at(static_cast<std::size_t>(s));
}

Observation sokoban_render(const SokobanLevel& level) {
  Observation out(nn::Shape{level.height * kSpriteSize, level.width * kSpriteSize, 3});
  const Index row_stride = static_cast<Index>(level.width) * kSpriteSize * 3;
  for (int y = 0; y < level.height; ++y) {
    for (int x = 0; x < level.width; ++x) {
      const Pos p{y, x};
      const bool target = level.tile(p) == Tile::target;
      Sprite s = Sprite::floor;
      if (level.tile(p) == Tile::wall) {
        s = Sprite::wall;
      } else if (level.has_box(p)) {
        s = target ? Sprite::box_on_target : Sprite::box;
      } else if (level.player == p) {
        s = target ? Sprite::player_on_target : Sprite::player;
      } else if (target) {
        s = Sprite::target;
      }
      const SpriteImage& img = sprite(s);
      for (int sy = 0; sy < kSpriteSize; ++sy) {
        float* dst = out.data() + (y * kSpriteSize + sy) * row_stride + x * kSpriteSize * 3;
        std::copy_n(img.data() + sy * kSpriteSize * 3, kSpriteSize * 3, dst);
      }
    }
  }
  return out;
}

SokobanEnv::SokobanEnv(LevelSource source, int episode_cap) : source_(std::move(source)), cap_(episode_cap) {
  if (cap_ <= 0) throw std::invalid_argument("sokoban: episode cap must be > 0");
}

nn::Shape SokobanEnv::observation_shape() const {
  const int h = level_.tiles.empty() ? 10 : level_.height;
  const int w = level_.tiles.empty() ? 10 : level_.width;
  return {h * kSpriteSize, w * kSpriteSize, 3};
}

Observation SokobanEnv::reset(std::uint64_t seed) {
  if (!source_) throw std::logic_error("sokoban: no level source configured");
  return reset_level(source_(seed));
}

Observation SokobanEnv::reset_level(const SokobanLevel& level) {
  level.validate();
  level_ = level;
  steps_ = 0;
  done_ = false;
  last_events_ = {};
  return observation();
}

StepResult SokobanEnv::step(int action) {
  if (done_) throw EpisodeDoneError("sokoban: step after episode end");
  last_events_ = sokoban_apply(level_, action);
  ++steps_;
  StepResult r;
  r.reward = sokoban_reward(last_events_);
  r.solved = last_events_.completed;
  r.done = r.solved || steps_ >= cap_;
  done_ = r.done;
  r.observation = observation();
  return r;
}

}  // namespace drc::env
