#pragma once

#include "drc/data/generator.hpp"
#include "drc/env/factory.hpp"
#include "drc/eval/evaluate.hpp"
#include "drc/net/config.hpp"
#include "drc/rl/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace drc::eval {

struct EvalSettings {
  std::string levels;  // level file or tree root; empty evaluates seeded environments
  std::string tier = "unfiltered";
  std::string split = "test";
  std::int64_t max_levels = 0;  // 0 keeps every level
  std::int64_t episodes = 1000;  // seeded-environment evaluation
  int episodes_per_level = 1;
  std::string mode = "sample";  // sample | greedy
  int batch = 16;
  int k_max = 10;
  std::vector<int> boxes = {4, 5, 6, 7};
  std::int64_t levels_per_count = 100;

  EvalOptions options(std::uint64_t seed, int episode_cap) const;
};

struct GenSettings {
  data::GeneratorConfig generator;
  std::int64_t train_count = 1000;
  std::int64_t test_count = 100;
  std::size_t per_file = 1000;
};

struct FilterSettings {
  std::string policy = "planning";  // random | planning | agent
  std::int64_t node_budget = 2000;  // planning policy
  std::string checkpoint;           // agent policy
  int attempts = 10;
  std::string tier = "medium";      // tier written for the kept levels
};

/// Everything a CLI run needs, read from `key = value` text. Sections:
/// seed, env.*, net.*, train.*, eval.*, gen.*, filter.*.
struct RunConfig {
  std::uint64_t seed = 0;
  env::EnvConfig env;
  net::DrcConfig net;
  rl::TrainConfig train;
  EvalSettings eval;
  GenSettings gen;
  FilterSettings filter;

  RunConfig();
  static RunConfig parse(const std::string& text, const std::string& origin = "<string>");
  static RunConfig load(const std::filesystem::path& file);

  /// Network defaults follow env.game (the standard encoder for that domain,
  /// DRC(3,3)); observation shape and action count always come from the
  /// environment.
  void apply(const KeyValueFile& kv);
  KeyValueFile to_key_values() const;
  std::string str() const { return to_key_values().str(); }
};

/// Throws ConfigError on keys outside the known sections.
void check_known_keys(const KeyValueFile& kv);

}  // namespace drc::eval
