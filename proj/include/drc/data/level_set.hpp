#pragma once

#include "drc/env/sokoban.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace drc::data {

using env::SokobanLevel;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& origin, int line, const std::string& message)
      : std::runtime_error(origin + ":" + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class Tier { unfiltered, medium, hard };
enum class Split { train, test };

std::string to_string(Tier tier);
std::string to_string(Split split);
Tier parse_tier(const std::string& text);
Split parse_split(const std::string& text);

struct LevelEntry {
  std::int64_t id = 0;
  SokobanLevel level;
  bool operator==(const LevelEntry&) const = default;
};

struct LevelSet {
  std::vector<LevelEntry> levels;
  Tier tier = Tier::unfiltered;
  Split split = Split::train;
  bool trailing_blank_line = false;  // preserved so parse/serialize round-trips bytes

  std::size_t size() const { return levels.size(); }
  bool empty() const { return levels.empty(); }
  /// Throws std::invalid_argument on duplicate ids.
  void check_unique_ids() const;
  bool operator==(const LevelSet&) const = default;
};

constexpr int kLevelSize = 10;

/// Boxoban text: "; <id>" then 10 rows of 10 characters, levels separated by
/// one blank line. `expected_boxes` < 0 accepts any matching box/target count.
LevelSet parse_levels(const std::string& text, const std::string& origin = "<text>", int expected_boxes = 4);
std::string serialize_levels(const LevelSet& set);

LevelSet read_level_file(const std::filesystem::path& file, int expected_boxes = 4);
void write_level_file(const std::filesystem::path& file, const LevelSet& set);

/// `<root>/<tier>/<split>/NNN.txt`, `per_file` levels per file.
std::vector<std::filesystem::path> write_level_tree(const std::filesystem::path& root, const LevelSet& set,
                                                    std::size_t per_file = 1000);
/// Reads every .txt file of one tier/split directory in name order.
LevelSet read_level_tree(const std::filesystem::path& root, Tier tier, Split split, int expected_boxes = 4);

/// 64-bit polynomial hash (FNV offset basis and prime) over the canonical
/// row serialization; box order cannot matter since rows encode a set.
std::uint64_t level_hash(const SokobanLevel& level);

}  // namespace drc::data
