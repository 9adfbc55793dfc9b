#include "drc/data/solver.hpp"

#include <algorithm>
#include <deque>
#include <string>
#include <unordered_map>

namespace drc::data {

using env::kDx;
using env::kDy;
using env::Pos;
using env::SokobanLevel;
using env::Tile;

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::unsolvable: return "unsolvable";
    case SolveStatus::budget_exhausted: return "budget_exhausted";
  }
  return "?";
}

std::vector<std::uint8_t> dead_squares(const SokobanLevel& level) {
  const int w = level.width;
  const auto n = static_cast<std::size_t>(level.height * w);
  std::vector<std::uint8_t> live(n, 0);
  std::deque<int> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (level.tiles[i] == Tile::target) {
      live[i] = 1;
      queue.push_back(static_cast<int>(i));
    }
  // A box at b can be pushed to c = b + d when the player fits at b - d.
  while (!queue.empty()) {
    const int c = queue.front();
    queue.pop_front();
    const Pos pc{c / w, c % w};
    for (int d = 0; d < 4; ++d) {
      const Pos b{pc.y - kDy[d], pc.x - kDx[d]};
      const Pos player{b.y - kDy[d], b.x - kDx[d]};
      if (level.is_wall(b) || level.is_wall(player)) continue;
      auto& l = live[static_cast<std::size_t>(level.index(b))];
      if (l) continue;
      l = 1;
      queue.push_back(level.index(b));
    }
  }
  std::vector<std::uint8_t> dead(n, 0);
  for (std::size_t i = 0; i < n; ++i) dead[i] = level.tiles[i] != Tile::wall && !live[i];
  return dead;
}

namespace {

struct Node {
  std::string key;  // sorted box cells, then the normalized player cell
  int parent = -1;
  std::uint8_t box = 0;  // cell of the pushed box before the push
  std::uint8_t dir = 0;
};

// Cells the player can walk to without pushing, as a 0/1 mask.
void walkable(const SokobanLevel& level, const std::vector<std::uint8_t>& boxes, int start,
              std::vector<std::uint8_t>& seen) {
  const int w = level.width;
  std::fill(seen.begin(), seen.end(), 0);
  std::vector<int> stack{start};
  seen[static_cast<std::size_t>(start)] = 1;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    for (int d = 0; d < 4; ++d) {
      const Pos q{c / w + kDy[d], c % w + kDx[d]};
      if (level.is_wall(q)) continue;
      const auto qi = static_cast<std::size_t>(level.index(q));
      if (seen[qi] || boxes[qi]) continue;
      seen[qi] = 1;
      stack.push_back(static_cast<int>(qi));
    }
  }
}

// Shortest walking path from `from` to `to` as actions, with boxes as walls.
std::vector<int> walk_path(const SokobanLevel& level, int from, int to) {
  const int w = level.width;
  std::vector<int> parent_dir(level.tiles.size(), -1);
  std::vector<std::uint8_t> seen(level.tiles.size(), 0);
  std::deque<int> queue{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!queue.empty() && !seen[static_cast<std::size_t>(to)]) {
    const int c = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      const Pos q{c / w + kDy[d], c % w + kDx[d]};
      if (level.is_wall(q) || level.has_box(q)) continue;
      const auto qi = static_cast<std::size_t>(level.index(q));
      if (seen[qi]) continue;
      seen[qi] = 1;
      parent_dir[qi] = d;
      queue.push_back(static_cast<int>(qi));
    }
  }
  std::vector<int> actions;
  for (int c = to; c != from;) {
    const int d = parent_dir[static_cast<std::size_t>(c)];
    actions.push_back(d);
    c = (c / w - kDy[d]) * w + (c % w - kDx[d]);
  }
  std::reverse(actions.begin(), actions.end());
  return actions;
}

}  // namespace

SolveResult solve_bfs(const SokobanLevel& level, std::int64_t node_budget) {
  if (node_budget <= 0) throw std::invalid_argument("solve_bfs: node budget must be > 0");
  level.validate();
  SolveResult result;
  if (level.solved()) {
    result.status = SolveStatus::solved;
    return result;
  }
  const int w = level.width;
  const auto cells = level.tiles.size();
  if (cells > 255) throw std::invalid_argument("solve_bfs: level too large for byte cell indices");
  const auto dead = dead_squares(level);

  std::vector<std::uint8_t> boxes(cells, 0), seen(cells, 0);
  auto make_key = [&](const std::vector<std::uint8_t>& box_mask, int player) {
    walkable(level, box_mask, player, seen);
    std::string key;
    for (std::size_t i = 0; i < cells; ++i)
      if (box_mask[i]) key += static_cast<char>(i);
    const auto first = std::find(seen.begin(), seen.end(), 1) - seen.begin();
    key += static_cast<char>(first);
    return key;
  };
  auto load = [&](const std::string& key) {
    std::fill(boxes.begin(), boxes.end(), 0);
    for (std::size_t i = 0; i + 1 < key.size(); ++i) boxes[static_cast<unsigned char>(key[i])] = 1;
    return static_cast<int>(static_cast<unsigned char>(key.back()));
  };

  std::vector<Node> nodes;
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < cells; ++i) boxes[i] = level.boxes[i];
  nodes.push_back({make_key(boxes, level.index(level.player)), -1, 0, 0});
  index.emplace(nodes[0].key, 0);

  int goal = -1;
  for (std::size_t head = 0; head < nodes.size() && goal < 0; ++head) {
    if (result.expanded >= node_budget) {
      result.status = SolveStatus::budget_exhausted;
      return result;
    }
    ++result.expanded;
    const std::string key = nodes[head].key;
    const int player = load(key);
    walkable(level, boxes, player, seen);
    const std::vector<std::uint8_t> reach = seen;
    for (std::size_t b = 0; b < cells && goal < 0; ++b) {
      if (!boxes[b]) continue;
      const Pos pb{static_cast<int>(b) / w, static_cast<int>(b) % w};
      for (int d = 0; d < 4; ++d) {
        const Pos from{pb.y - kDy[d], pb.x - kDx[d]};
        const Pos to{pb.y + kDy[d], pb.x + kDx[d]};
        if (level.is_wall(from) || !reach[static_cast<std::size_t>(level.index(from))]) continue;
        if (level.is_wall(to)) continue;
        const auto ti = static_cast<std::size_t>(level.index(to));
        if (boxes[ti] || dead[ti]) continue;
        boxes[b] = 0;
        boxes[ti] = 1;
        std::string next = make_key(boxes, static_cast<int>(b));
        bool done = true;
        for (std::size_t i = 0; i < cells; ++i)
          if (boxes[i] && level.tiles[i] != Tile::target) done = false;
        boxes[ti] = 0;
        boxes[b] = 1;
        if (index.count(next)) continue;
        index.emplace(next, static_cast<int>(nodes.size()));
        nodes.push_back({std::move(next), static_cast<int>(head), static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(d)});
        if (done) {
          goal = static_cast<int>(nodes.size()) - 1;
          break;
        }
      }
    }
  }
  if (goal < 0) {
    result.status = SolveStatus::unsolvable;
    return result;
  }

  std::vector<const Node*> pushes;
  for (int n = goal; nodes[static_cast<std::size_t>(n)].parent >= 0; n = nodes[static_cast<std::size_t>(n)].parent) {
    pushes.push_back(&nodes[static_cast<std::size_t>(n)]);
  }
  std::reverse(pushes.begin(), pushes.end());
  SokobanLevel state = level;
  for (const Node* p : pushes) {
    const Pos pb{p->box / w, p->box % w};
    const Pos from{pb.y - kDy[p->dir], pb.x - kDx[p->dir]};
    for (int a : walk_path(state, state.index(state.player), state.index(from))) {
      env::sokoban_apply(state, a);
      result.solution.actions.push_back(a);
    }
    env::sokoban_apply(state, p->dir);
    result.solution.actions.push_back(p->dir);
  }
  result.solution.pushes = static_cast<int>(pushes.size());
  result.status = SolveStatus::solved;
  return result;
}

bool replay_solves(const SokobanLevel& level, const std::vector<int>& actions) {
  SokobanLevel state = level;
  for (int a : actions) env::sokoban_apply(state, a);
  return state.solved();
}

}  // namespace drc::data
