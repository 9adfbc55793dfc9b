#pragma once

#include "drc/data/level_set.hpp"

#include <functional>

namespace drc::data {

/// Acts in one episode; called with the environment before each step.
using EpisodePolicy = std::function<int(const env::SokobanEnv&)>;
/// Builds a fresh policy (own RNG / recurrent state) for one attempt.
using PolicyFactory = std::function<EpisodePolicy(std::uint64_t seed)>;

struct FilterConfig {
  int attempts = 1;
  int step_cap = 120;
  std::uint64_t seed = 0;
};

/// Keeps the levels that no attempt of the policy solves. Ids and order are
/// preserved; attempts == 0 yields an empty set.
LevelSet filter_by_agent(const LevelSet& levels, const PolicyFactory& policy, const FilterConfig& config = {});

/// Uniformly random moves (no noop).
PolicyFactory random_policy();

/// Plans with a node-limited BFS from the current state and follows the plan;
/// acts noop when the search does not finish. Solves easy levels only.
PolicyFactory planning_policy(std::int64_t node_budget);

}  // namespace drc::data
