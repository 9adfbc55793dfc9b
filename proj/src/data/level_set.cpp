#include "drc/data/level_set.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace drc::data {

std::string to_string(Tier tier) {
  switch (tier) {
    case Tier::unfiltered: return "unfiltered";
    case Tier::medium: return "medium";
    case Tier::hard: return "hard";
  }
  return "?";
}

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

Tier parse_tier(const std::string& text) {
  if (text == "unfiltered") return Tier::unfiltered;
  if (text == "medium") return Tier::medium;
  if (text == "hard") return Tier::hard;
  throw std::invalid_argument("unknown tier '" + text + "'");
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + text + "'");
}

void LevelSet::check_unique_ids() const {
  std::set<std::int64_t> seen;
  for (const auto& e : levels)
    if (!seen.insert(e.id).second) throw std::invalid_argument("duplicate level id " + std::to_string(e.id));
}

LevelSet parse_levels(const std::string& text, const std::string& origin, int expected_boxes) {
  LevelSet set;
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      const auto nl = text.find('\n', start);
      if (nl == std::string::npos) {
        lines.push_back(text.substr(start));
        break;
      }
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
  }
  if (!text.empty() && text.back() != '\n') {
    throw ParseError(origin, static_cast<int>(lines.size()), "missing final newline");
  }
  std::set<std::int64_t> ids;
  std::size_t i = 0;
  while (i < lines.size()) {
    const int line_no = static_cast<int>(i) + 1;
    const std::string& header = lines[i];
    if (header.rfind("; ", 0) != 0) throw ParseError(origin, line_no, "expected level header '; <id>'");
    const std::string id_text = header.substr(2);
    std::int64_t id = 0;
    std::size_t used = 0;
    try {
      id = std::stoll(id_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (id_text.empty() || used != id_text.size() || std::to_string(id) != id_text) {
      throw ParseError(origin, line_no, "bad level id '" + id_text + "'");
    }
    if (!ids.insert(id).second) throw ParseError(origin, line_no, "duplicate level id " + id_text);
    if (i + kLevelSize >= lines.size()) {
      throw ParseError(origin, line_no, "level " + id_text + " has fewer than " + std::to_string(kLevelSize) + " rows");
    }
    std::vector<std::string> rows(lines.begin() + static_cast<std::ptrdiff_t>(i + 1),
                                  lines.begin() + static_cast<std::ptrdiff_t>(i + 1 + kLevelSize));
    for (int r = 0; r < kLevelSize; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != kLevelSize) {
        throw ParseError(origin, line_no + 1 + r,
                         "row has " + std::to_string(row.size()) + " characters, expected " + std::to_string(kLevelSize));
      }
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (std::string("# .$@*+").find(row[c]) == std::string::npos) {
          throw ParseError(origin, line_no + 1 + r,
                           "invalid character '" + std::string(1, row[c]) + "' at column " + std::to_string(c + 1));
        }
      }
    }
    SokobanLevel level;
    try {
      level = SokobanLevel::from_rows(rows);
      level.validate(expected_boxes);
    } catch (const env::LevelError& e) {
      throw ParseError(origin, line_no, "level " + id_text + ": " + e.what());
    }
    set.levels.push_back({id, std::move(level)});
    i += 1 + kLevelSize;
    if (i == lines.size()) break;
    if (!lines[i].empty()) throw ParseError(origin, static_cast<int>(i) + 1, "expected a blank line between levels");
    ++i;
    if (i == lines.size()) {
      set.trailing_blank_line = true;
      break;
    }
  }
  return set;
}

std::string serialize_levels(const LevelSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.levels.size(); ++i) {
    if (i > 0) out += '\n';
    out += "; " + std::to_string(set.levels[i].id) + "\n";
    for (const auto& row : set.levels[i].level.to_rows()) out += row + "\n";
  }
  if (set.trailing_blank_line && !set.levels.empty()) out += '\n';
  return out;
}

LevelSet read_level_file(const std::filesystem::path& file, int expected_boxes) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open level file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_levels(ss.str(), file.string(), expected_boxes);
}

void write_level_file(const std::filesystem::path& file, const LevelSet& set) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write level file " + file.string());
  out << serialize_levels(set);
}

std::vector<std::filesystem::path> write_level_tree(const std::filesystem::path& root, const LevelSet& set,
                                                    std::size_t per_file) {
  if (per_file == 0) throw std::invalid_argument("write_level_tree: per_file must be > 0");
  const auto dir = root / to_string(set.tier) / to_string(set.split);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  for (std::size_t start = 0, n = 0; start < set.levels.size(); start += per_file, ++n) {
    LevelSet chunk;
    chunk.tier = set.tier;
    chunk.split = set.split;
    const auto end = std::min(set.levels.size(), start + per_file);
    chunk.levels.assign(set.levels.begin() + static_cast<std::ptrdiff_t>(start),
                        set.levels.begin() + static_cast<std::ptrdiff_t>(end));
    std::ostringstream name;
    name << std::setw(3) << std::setfill('0') << n << ".txt";
    write_level_file(dir / name.str(), chunk);
    files.push_back(dir / name.str());
  }
  return files;
}

LevelSet read_level_tree(const std::filesystem::path& root, Tier tier, Split split, int expected_boxes) {
  const auto dir = root / to_string(tier) / to_string(split);
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("no level directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  LevelSet set;
  set.tier = tier;
  set.split = split;
  for (const auto& f : files) {
    auto part = read_level_file(f, expected_boxes);
    for (auto& e : part.levels) set.levels.push_back(std::move(e));
  }
  return set;
}

std::uint64_t level_hash(const SokobanLevel& level) {
  std::uint64_t h = 14695981039346656037ULL;
  auto feed = [&](unsigned char c) { h = h * 1099511628211ULL + c; };
  for (const auto& row : level.to_rows()) {
    for (char c : row) feed(static_cast<unsigned char>(c));
    feed('\n');
  }
  return h;
}

}  // namespace drc::data
