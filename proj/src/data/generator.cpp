#include "drc/data/generator.hpp"

#include "drc/util/random.hpp"

#include <cstdlib>
#include <unordered_set>

namespace drc::data {

using env::kDx;
using env::kDy;
using env::Pos;
using env::Tile;

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("generator config: " + m); };
  if (size < 5 || size > 15) fail("size must be in [5, 15]");
  if (boxes < 1) fail("boxes must be >= 1");
  if (walk_steps < 1 || reverse_tries < 1 || reverse_steps < 1) fail("walk lengths must be >= 1");
  if (max_attempts < 1) fail("max_attempts must be >= 1");
  if (certify_budget < 1) fail("certify_budget must be >= 1");
}

namespace {

// 3x3 carving stamps (row-major), applied around the walker.
constexpr int kMasks[5][9] = {
    {0, 0, 0, 1, 1, 1, 0, 0, 0},
    {0, 1, 0, 0, 1, 0, 0, 1, 0},
    {0, 0, 0, 1, 1, 0, 0, 1, 0},
    {0, 0, 0, 1, 1, 0, 1, 1, 0},
    {0, 0, 0, 0, 1, 1, 0, 1, 0},
};

SokobanLevel carve_room(const GeneratorConfig& c, Rng& rng) {
  SokobanLevel l = SokobanLevel::empty(c.size, c.size);
  const int lo = 1, hi = c.size - 2;
  Pos p{uniform_int(rng, lo, hi), uniform_int(rng, lo, hi)};
  int dir = uniform_int(rng, 0, 3);
  for (int s = 0; s < c.walk_steps; ++s) {
    if (uniform01(rng) < 0.35) dir = uniform_int(rng, 0, 3);
    p = {std::clamp(p.y + kDy[dir], lo, hi), std::clamp(p.x + kDx[dir], lo, hi)};
    const int* mask = kMasks[uniform_index(rng, 5)];
    for (int k = 0; k < 9; ++k) {
      if (!mask[k]) continue;
      const Pos q{p.y + k / 3 - 1, p.x + k % 3 - 1};
      if (q.y < lo || q.y > hi || q.x < lo || q.x > hi) continue;
      l.tiles[static_cast<std::size_t>(l.index(q))] = Tile::floor;
    }
  }
  return l;
}

struct Reverse {
  SokobanLevel level;
  std::vector<Pos> origin;  // target each tracked box started on
  std::vector<Pos> box;
};

int displacement(const Reverse& r) {
  int s = 0;
  for (std::size_t i = 0; i < r.box.size(); ++i) s += std::abs(r.box[i].y - r.origin[i].y) + std::abs(r.box[i].x - r.origin[i].x);
  return s;
}

bool all_off_target(const SokobanLevel& l) { return l.boxes_on_target() == 0; }

}  // namespace

SokobanLevel generate_level(std::uint64_t seed, const GeneratorConfig& config) {
  config.validate();
  Rng rng = make_rng(seed);
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    SokobanLevel room = carve_room(config, rng);
    std::vector<Pos> floor;
    for (int y = 0; y < config.size; ++y)
      for (int x = 0; x < config.size; ++x)
        if (room.tile({y, x}) != Tile::wall) floor.push_back({y, x});
    if (static_cast<int>(floor.size()) < 2 * config.boxes + 4) continue;

    shuffle(rng, std::span<Pos>(floor));
    Reverse start{room, {}, {}};
    for (int b = 0; b < config.boxes; ++b) {
      const Pos t = floor[static_cast<std::size_t>(b)];
      start.level.tiles[static_cast<std::size_t>(room.index(t))] = Tile::target;
      start.level.boxes[static_cast<std::size_t>(room.index(t))] = 1;
      start.origin.push_back(t);
      start.box.push_back(t);
    }
    start.level.player = floor[static_cast<std::size_t>(config.boxes)];

    // Reverse play: the player walks and may pull the box behind it.
    Reverse best;
    int best_score = 0;
    for (int t = 0; t < config.reverse_tries; ++t) {
      Reverse r = start;
      for (int s = 0; s < config.reverse_steps; ++s) {
        const int d = uniform_int(rng, 0, 3);
        const Pos& p = r.level.player;
        const Pos q{p.y + kDy[d], p.x + kDx[d]};
        if (r.level.is_wall(q) || r.level.has_box(q)) continue;
        const Pos behind{p.y - kDy[d], p.x - kDx[d]};
        const bool pull = r.level.inside(behind) && r.level.has_box(behind) && uniform01(rng) < 0.6;
        if (pull) {
          r.level.boxes[static_cast<std::size_t>(r.level.index(behind))] = 0;
          r.level.boxes[static_cast<std::size_t>(r.level.index(p))] = 1;
          for (auto& b : r.box)
            if (b == behind) b = p;
        }
        r.level.player = q;
        if (pull && all_off_target(r.level)) {
          const int score = displacement(r);
          if (score > best_score) {
            best_score = score;
            best = r;
          }
        }
      }
    }
    if (best_score == 0) continue;
    const auto cert = solve_bfs(best.level, config.certify_budget);
    if (cert.solved()) return best.level;
  }
  throw GenerationError("generate_level: no certified level after " + std::to_string(config.max_attempts) +
                        " attempts (seed " + std::to_string(seed) + ")");
}

LevelSet generate_levels(std::uint64_t base_seed, std::size_t count, const GeneratorConfig& config,
                         const std::vector<std::uint64_t>& exclude) {
  LevelSet set;
  std::unordered_set<std::uint64_t> seen(exclude.begin(), exclude.end());
  for (std::uint64_t i = 0; set.levels.size() < count; ++i) {
    if (i > 100 * count + 1000) throw GenerationError("generate_levels: too many duplicate levels");
    SokobanLevel l = generate_level(derive_seed(base_seed, i), config);
    if (!seen.insert(level_hash(l)).second) continue;
    set.levels.push_back({static_cast<std::int64_t>(set.levels.size()), std::move(l)});
  }
  return set;
}

}  // namespace drc::data
