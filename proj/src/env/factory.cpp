#include "drc/env/factory.hpp"

#include "drc/data/generator.hpp"
#include "drc/data/level_set.hpp"
#include "drc/env/bandit.hpp"

namespace drc::env {

int EnvConfig::episode_cap() const {
  if (game == "sokoban") return sokoban.episode_cap;
  if (game == "gridworld") return gridworld.episode_cap;
  if (game == "boxworld") return boxworld.episode_cap;
  if (game == "minipacman") return minipacman.episode_cap;
  return 1;
}

nn::Shape EnvConfig::observation_shape() const {
  if (game == "sokoban") return {80, 80, 3};
  if (game == "gridworld") return {gridworld.size, gridworld.size, 1};
  if (game == "boxworld") return {boxworld.room + 2, boxworld.room + 2, 3};
  if (game == "minipacman") return {kPacmanRows, kPacmanCols, 3};
  if (game == "bandit") return {BanditEnv::kSize, BanditEnv::kSize, 1};
  throw ConfigError("unknown game '" + game + "'");
}

int EnvConfig::action_count() const {
  if (game == "sokoban" || game == "minipacman") return 5;
  if (game == "gridworld" || game == "boxworld") return 4;
  if (game == "bandit") return 2;
  throw ConfigError("unknown game '" + game + "'");
}

void EnvConfig::validate() const {
  observation_shape();
  if (game == "sokoban") {
    if (sokoban.episode_cap <= 0) throw ConfigError("env.sokoban.episode_cap must be > 0");
    if (sokoban.boxes < 1) throw ConfigError("env.sokoban.boxes must be >= 1");
    data::parse_tier(sokoban.tier);
    data::parse_split(sokoban.split);
  }
  try {
    if (game == "gridworld") gridworld.validate();
    if (game == "boxworld") boxworld.validate();
    if (game == "minipacman") minipacman.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void EnvConfig::apply(const KeyValueFile& kv, const std::string& prefix) {
  auto has = [&](const std::string& k) { return kv.contains(prefix + k); };
  auto str = [&](const std::string& k) { return kv.get(prefix + k); };
  auto i = [&](const std::string& k, int& out) {
    if (has(k)) out = parse_int(prefix + k, str(k));
  };
  auto d = [&](const std::string& k, double& out) {
    if (has(k)) out = parse_double(prefix + k, str(k));
  };
  if (has("game")) game = str("game");
  if (has("sokoban.levels")) sokoban.levels = str("sokoban.levels");
  if (has("sokoban.tier")) sokoban.tier = str("sokoban.tier");
  if (has("sokoban.split")) sokoban.split = str("sokoban.split");
  i("sokoban.boxes", sokoban.boxes);
  i("sokoban.episode_cap", sokoban.episode_cap);
  i("gridworld.size", gridworld.size);
  i("gridworld.obstacles_min", gridworld.obstacles_min);
  i("gridworld.obstacles_max", gridworld.obstacles_max);
  i("gridworld.side_min", gridworld.side_min);
  i("gridworld.side_max", gridworld.side_max);
  i("gridworld.episode_cap", gridworld.episode_cap);
  i("gridworld.max_attempts", gridworld.max_attempts);
  i("boxworld.room", boxworld.room);
  i("boxworld.branch_length", boxworld.branch_length);
  i("boxworld.max_solution_length", boxworld.max_solution_length);
  i("boxworld.min_solution_length", boxworld.min_solution_length);
  i("boxworld.max_distractors", boxworld.max_distractors);
  i("boxworld.episode_cap", boxworld.episode_cap);
  i("minipacman.ghosts", minipacman.ghosts);
  i("minipacman.pills", minipacman.pills);
  d("minipacman.ghost_move_probability", minipacman.ghost_move_probability);
  i("minipacman.edible_steps", minipacman.edible_steps);
  i("minipacman.fade_steps", minipacman.fade_steps);
  i("minipacman.episode_cap", minipacman.episode_cap);
  validate();
}

void EnvConfig::write(KeyValueFile& kv, const std::string& prefix) const {
  auto s = [&](const std::string& k, const std::string& v) { kv.set(prefix + k, v); };
  auto n = [&](const std::string& k, int v) { kv.set(prefix + k, std::to_string(v)); };
  s("game", game);
  if (game == "sokoban") {
    if (!sokoban.levels.empty()) s("sokoban.levels", sokoban.levels);
    s("sokoban.tier", sokoban.tier);
    s("sokoban.split", sokoban.split);
    n("sokoban.boxes", sokoban.boxes);
    n("sokoban.episode_cap", sokoban.episode_cap);
  } else if (game == "gridworld") {
    n("gridworld.size", gridworld.size);
    n("gridworld.obstacles_min", gridworld.obstacles_min);
    n("gridworld.obstacles_max", gridworld.obstacles_max);
    n("gridworld.side_min", gridworld.side_min);
    n("gridworld.side_max", gridworld.side_max);
    n("gridworld.episode_cap", gridworld.episode_cap);
    n("gridworld.max_attempts", gridworld.max_attempts);
  } else if (game == "boxworld") {
    n("boxworld.room", boxworld.room);
    n("boxworld.branch_length", boxworld.branch_length);
    n("boxworld.max_solution_length", boxworld.max_solution_length);
    n("boxworld.min_solution_length", boxworld.min_solution_length);
    n("boxworld.max_distractors", boxworld.max_distractors);
    n("boxworld.episode_cap", boxworld.episode_cap);
  } else if (game == "minipacman") {
    n("minipacman.ghosts", minipacman.ghosts);
    n("minipacman.pills", minipacman.pills);
    s("minipacman.ghost_move_probability", format_double(minipacman.ghost_move_probability));
    n("minipacman.edible_steps", minipacman.edible_steps);
    n("minipacman.fade_steps", minipacman.fade_steps);
    n("minipacman.episode_cap", minipacman.episode_cap);
  }
}

LevelSource sokoban_level_source(const SokobanConfig& config) {
  if (config.levels.empty()) {
    data::GeneratorConfig g;
    g.boxes = config.boxes;
    return [g](std::uint64_t seed) { return data::generate_level(seed, g); };
  }
  const std::filesystem::path path(config.levels);
  auto set = std::make_shared<const data::LevelSet>(
      std::filesystem::is_directory(path)
          ? data::read_level_tree(path, data::parse_tier(config.tier), data::parse_split(config.split), config.boxes)
          : data::read_level_file(path, config.boxes));
  if (set->empty()) throw ConfigError("no levels in " + config.levels);
  return [set](std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return set->levels[uniform_index(rng, set->levels.size())].level;
  };
}

namespace {

std::unique_ptr<Environment> make_non_sokoban(const EnvConfig& config) {
  if (config.game == "gridworld") return std::make_unique<GridworldEnv>(config.gridworld);
  if (config.game == "boxworld") return std::make_unique<BoxworldEnv>(config.boxworld);
  if (config.game == "minipacman") return std::make_unique<MiniPacmanEnv>(config.minipacman);
  if (config.game == "bandit") return std::make_unique<BanditEnv>();
  throw ConfigError("unknown game '" + config.game + "'");
}

}  // namespace

EnvironmentFactory environment_factory(const EnvConfig& config) {
  config.validate();
  if (config.game == "sokoban") {
    auto source = sokoban_level_source(config.sokoban);
    const int cap = config.sokoban.episode_cap;
    return [source, cap]() -> std::unique_ptr<Environment> { return std::make_unique<SokobanEnv>(source, cap); };
  }
  return [config] { return make_non_sokoban(config); };
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config) { return environment_factory(config)(); }

}  // namespace drc::env
