#include "drc/data/filter.hpp"

#include "drc/data/solver.hpp"
#include "drc/util/random.hpp"

#include <memory>

namespace drc::data {

LevelSet filter_by_agent(const LevelSet& levels, const PolicyFactory& policy, const FilterConfig& config) {
  if (config.attempts < 0) throw std::invalid_argument("filter_by_agent: attempts must be >= 0");
  LevelSet out;
  out.tier = levels.tier;
  out.split = levels.split;
  out.trailing_blank_line = levels.trailing_blank_line;
  if (config.attempts == 0) return out;
  for (std::size_t i = 0; i < levels.levels.size(); ++i) {
    const auto& entry = levels.levels[i];
    bool solved = false;
    for (int a = 0; a < config.attempts && !solved; ++a) {
      const SokobanLevel level = entry.level;
      env::SokobanEnv env([level](std::uint64_t) { return level; }, config.step_cap);
      env.reset(0);
      EpisodePolicy act = policy(derive_seed(config.seed, i * static_cast<std::uint64_t>(config.attempts) + a));
      while (!env.done()) solved = env.step(act(env)).solved || solved;
    }
    if (!solved) out.levels.push_back(entry);
  }
  return out;
}

PolicyFactory random_policy() {
  return [](std::uint64_t seed) -> EpisodePolicy {
    auto rng = std::make_shared<Rng>(make_rng(seed));
    return [rng](const env::SokobanEnv&) { return uniform_int(*rng, 0, 3); };
  };
}

PolicyFactory planning_policy(std::int64_t node_budget) {
  return [node_budget](std::uint64_t) -> EpisodePolicy {
    struct Plan {
      std::vector<int> actions;
      std::size_t next = 0;
      bool tried = false;
    };
    auto plan = std::make_shared<Plan>();
    return [plan, node_budget](const env::SokobanEnv& env) {
      if (!plan->tried) {
        plan->tried = true;
        const auto r = solve_bfs(env.level(), node_budget);
        if (r.solved()) plan->actions = r.solution.actions;
      }
      if (plan->next < plan->actions.size()) return plan->actions[plan->next++];
      return static_cast<int>(env::kNoop);
    };
  };
}

}  // namespace drc::data
