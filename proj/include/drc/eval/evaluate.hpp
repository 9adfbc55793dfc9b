#pragma once

#include "drc/data/filter.hpp"
#include "drc/data/generator.hpp"
#include "drc/data/level_set.hpp"
#include "drc/env/factory.hpp"
#include "drc/net/drc.hpp"
#include "drc/rl/actor.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace drc::eval {

struct EpisodeOutcome {
  double episode_return = 0;
  int length = 0;
  bool solved = false;
  bool operator==(const EpisodeOutcome&) const = default;
};

struct EvalReport {
  std::string level_set;
  std::int64_t episodes = 0;
  std::int64_t solved = 0;
  double solved_fraction = 0;
  double mean_return = 0;
  double mean_length = 0;
  double ci_half_width = 0;  // 95% normal approximation

  std::string json() const;
  bool operator==(const EvalReport&) const = default;
};

/// 1.96 * sqrt(p (1 - p) / n); 0 for n == 0.
double binomial_half_width(std::int64_t solved, std::int64_t episodes);

/// Sums outcomes in order.
EvalReport aggregate(const std::string& level_set, const std::vector<EpisodeOutcome>& outcomes);

struct EvalOptions {
  int episodes_per_level = 1;
  rl::ActionMode mode = rl::ActionMode::sample;
  std::uint64_t seed = 0;
  int batch = 16;  // episodes stepped together
  int episode_cap = 120;
};

/// Network policy on every level of `levels` (episodes_per_level each, level
/// order preserved). The first `forced_noops` actions are no-ops while the
/// network still steps its state on the real observations.
std::vector<EpisodeOutcome> run_levels(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                       const data::LevelSet& levels, const EvalOptions& options, int forced_noops = 0);

EvalReport evaluate(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params, const data::LevelSet& levels,
                    const EvalOptions& options = {});

/// Network policy on `episodes` environments; episode i is reset with
/// derive_seed(splitmix64(options.seed), i).
EvalReport evaluate_environment(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                const env::EnvironmentFactory& factory, std::int64_t episodes,
                                const EvalOptions& options = {}, const std::string& name = "environment",
                                int forced_noops = 0);

/// Scripted policy on a level set; attempt seeds are derive_seed(options.seed, i).
EvalReport evaluate_policy(const data::PolicyFactory& policy, const data::LevelSet& levels,
                           const EvalOptions& options = {});

/// Recurrent state after `env_steps` steps of one episode on `level` with the
/// first `forced_noops` actions forced.
net::DrcState<float> state_after(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                 const env::SokobanLevel& level, int forced_noops, int env_steps,
                                 const EvalOptions& options = {});

struct ThinkingCurve {
  std::vector<std::int64_t> level_ids;  // shared by every entry
  std::map<int, EvalReport> reports;    // forced no-ops -> report

  std::string json() const;
};

ThinkingCurve thinking_steps_eval(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                  const data::LevelSet& levels, int k_max = 10, const EvalOptions& options = {});

/// test - train solved fraction.
double generalization_gap(const EvalReport& train, const EvalReport& test);

struct BoxCountResult {
  int boxes = 0;
  EvalReport report;
  double delta = 0;  // solved fraction minus the smallest box count's
};

struct ExtrapolationReport {
  std::vector<BoxCountResult> results;
  std::string json() const;
};

/// Levels for box count n come from data::generate_levels(derive_seed(seed, n), ...).
data::LevelSet extrapolation_levels(int boxes, std::int64_t count, std::uint64_t seed,
                                    data::GeneratorConfig generator = {});

ExtrapolationReport extrapolate_boxes(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                      const std::vector<int>& box_counts, std::int64_t levels_per_count,
                                      std::uint64_t seed, const EvalOptions& options = {},
                                      const data::GeneratorConfig& generator = {});

/// A level file, or the tier/split directory of a level tree. Any box count.
data::LevelSet load_levels(const std::filesystem::path& path, const std::string& tier = "unfiltered",
                           const std::string& split = "test");

/// The network as a scripted Sokoban policy; each attempt starts from a zero
/// state with its own sampling RNG. `net` and `params` must outlive the policy.
data::PolicyFactory network_policy(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                   rl::ActionMode mode = rl::ActionMode::sample);

/// Throws std::invalid_argument unless `params` holds exactly the network's
/// parameter paths and shapes.
void check_parameters(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params);

}  // namespace drc::eval
