#pragma once

#include "drc/env/boxworld.hpp"
#include "drc/env/gridworld.hpp"
#include "drc/env/minipacman.hpp"
#include "drc/env/sokoban.hpp"
#include "drc/util/key_value.hpp"

#include <memory>
#include <string>

namespace drc::env {

struct SokobanConfig {
  std::string levels;  // level file or tree root; empty draws from the generator
  std::string tier = "unfiltered";
  std::string split = "train";
  int boxes = 4;
  int episode_cap = 120;
};

/// Game selection plus the knobs of every game; only the selected game's
/// section is used.
struct EnvConfig {
  std::string game = "sokoban";  // sokoban | gridworld | boxworld | minipacman | bandit
  SokobanConfig sokoban;
  GridworldConfig gridworld;
  BoxworldConfig boxworld;
  MiniPacmanConfig minipacman;

  int episode_cap() const;
  nn::Shape observation_shape() const;
  int action_count() const;

  void validate() const;
  void apply(const KeyValueFile& kv, const std::string& prefix = "env.");
  void write(KeyValueFile& kv, const std::string& prefix = "env.") const;
};

/// Builds a fresh environment. Sokoban level files are read once per call
/// and shared read-only by the returned instance.
std::unique_ptr<Environment> make_environment(const EnvConfig& config);

/// Factory whose environments share one loaded level list.
using EnvironmentFactory = std::function<std::unique_ptr<Environment>()>;
EnvironmentFactory environment_factory(const EnvConfig& config);

/// Level source drawing uniformly (by seed) from the configured file or tree,
/// or generating a fresh level per seed.
LevelSource sokoban_level_source(const SokobanConfig& config);

}  // namespace drc::env
