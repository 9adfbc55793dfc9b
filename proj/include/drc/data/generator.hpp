#pragma once

#include "drc/data/level_set.hpp"
#include "drc/data/solver.hpp"

namespace drc::data {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeneratorConfig {
  int size = 10;
  int boxes = 4;
  int walk_steps = 30;         // room-carving random walk length
  int reverse_tries = 16;      // independent reverse-play walks per room
  int reverse_steps = 1000;    // moves per reverse-play walk
  int max_attempts = 1000;     // rooms tried before giving up
  std::int64_t certify_budget = 500000;

  void validate() const;
};

/// Random-walk room, boxes placed on their targets, reverse play (pulls)
/// until every box is off its target, then BFS certification.
SokobanLevel generate_level(std::uint64_t seed, const GeneratorConfig& config = {});

/// `count` distinct levels (by level_hash) from seeds derive_seed(base, i),
/// i = 0, 1, ...; ids are 0..count-1. Levels whose hash is in `exclude` are
/// skipped, which keeps splits disjoint.
LevelSet generate_levels(std::uint64_t base_seed, std::size_t count, const GeneratorConfig& config = {},
                         const std::vector<std::uint64_t>& exclude = {});

}  // namespace drc::data
