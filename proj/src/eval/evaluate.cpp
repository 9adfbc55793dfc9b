#include "drc/eval/evaluate.hpp"

#include <json.hpp>

#include <cmath>
#include <functional>

namespace drc::eval {

using nn::Index;
using Json = nlohmann::ordered_json;

namespace {

Json report_json(const EvalReport& r) {
  return Json{{"level_set", r.level_set},         {"episodes", r.episodes},       {"solved", r.solved},
              {"solved_fraction", r.solved_fraction}, {"mean_return", r.mean_return}, {"mean_length", r.mean_length},
              {"ci_half_width", r.ci_half_width}};
}

using EpisodeStart = std::function<env::Observation(std::int64_t, std::unique_ptr<env::Environment>&)>;

struct Running {
  std::int64_t index = 0;
  std::unique_ptr<env::Environment> env;
  net::DrcState<float> state;
  Rng rng;
  env::Observation observation;
  EpisodeOutcome outcome;
};

std::vector<EpisodeOutcome> run_network(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                        std::int64_t count, const EpisodeStart& start, const EvalOptions& options,
                                        int forced_noops) {
  if (options.batch < 1) throw std::invalid_argument("evaluate: batch must be >= 1");
  if (forced_noops < 0) throw std::invalid_argument("evaluate: forced no-op count must be >= 0");
  const int actions = net.config().action_count;
  const nn::Shape obs_shape = net.config().observation_shape();
  const Index per = obs_shape.numel();

  std::vector<EpisodeOutcome> results(static_cast<std::size_t>(count));
  std::vector<Running> active;
  std::int64_t next = 0;
  auto launch = [&] {
    Running r;
    r.index = next;
    r.observation = start(next, r.env);
    if (forced_noops > 0 && !r.env->noop_action()) {
      throw std::invalid_argument("thinking steps: environment '" + r.env->name() + "' has no no-op action");
    }
    nn::require_same_shape(r.observation.shape(), obs_shape, "evaluate observation");
    r.state = net.zero_state(1);
    r.rng = make_rng(derive_seed(options.seed, static_cast<std::uint64_t>(next)));
    ++next;
    active.push_back(std::move(r));
  };

  std::vector<net::DrcState<float>> states;
  while (next < count || !active.empty()) {
    while (next < count && active.size() < static_cast<std::size_t>(options.batch)) launch();
    const Index n = static_cast<Index>(active.size());
    nn::Tensor<float> batch(nn::Shape{n, obs_shape[0], obs_shape[1], obs_shape[2]});
    states.resize(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      std::copy(active[i].observation.data(), active[i].observation.data() + per,
                batch.data() + static_cast<Index>(i) * per);
      states[i] = active[i].state;
    }
    const auto result = net.forward(params, net::DrcState<float>::stack(states), batch);
    std::vector<Running> still;
    for (std::size_t i = 0; i < active.size(); ++i) {
      Running& r = active[i];
      int a;
      if (r.env->steps() < forced_noops) {
        a = *r.env->noop_action();
      } else {
        const float* row = result.logits.data() + static_cast<Index>(i) * actions;
        a = rl::select_action(std::span<const float>(row, static_cast<std::size_t>(actions)), r.rng, options.mode);
      }
      const auto step = r.env->step(a);
      r.outcome.episode_return += step.reward;
      r.outcome.length = r.env->steps();
      if (step.done) {
        r.outcome.solved = step.solved;
        results[static_cast<std::size_t>(r.index)] = r.outcome;
      } else {
        r.observation = step.observation;
        r.state = result.state.select(static_cast<Index>(i));
        still.push_back(std::move(r));
      }
    }
    active = std::move(still);
  }
  return results;
}

EpisodeStart level_start(const data::LevelSet& levels, const EvalOptions& options) {
  if (levels.empty()) throw std::invalid_argument("evaluate: empty level set");
  if (options.episodes_per_level < 1) throw std::invalid_argument("evaluate: episodes_per_level must be >= 1");
  return [&levels, options](std::int64_t i, std::unique_ptr<env::Environment>& out) {
    const auto& level = levels.levels[static_cast<std::size_t>(i / options.episodes_per_level)].level;
    auto env = std::make_unique<env::SokobanEnv>(
        [](std::uint64_t) -> env::SokobanLevel { throw std::logic_error("evaluation environments use reset_level"); },
        options.episode_cap);
    auto obs = env->reset_level(level);
    out = std::move(env);
    return obs;
  };
}

std::string level_set_name(const data::LevelSet& levels) {
  return data::to_string(levels.tier) + "/" + data::to_string(levels.split);
}

}  // namespace

std::string EvalReport::json() const { return report_json(*this).dump(); }

double binomial_half_width(std::int64_t solved, std::int64_t episodes) {
  if (episodes <= 0) return 0;
  const double p = static_cast<double>(solved) / static_cast<double>(episodes);
  return 1.96 * std::sqrt(p * (1 - p) / static_cast<double>(episodes));
}

EvalReport aggregate(const std::string& level_set, const std::vector<EpisodeOutcome>& outcomes) {
  EvalReport r;
  r.level_set = level_set;
  r.episodes = static_cast<std::int64_t>(outcomes.size());
  double ret = 0, len = 0;
  for (const auto& o : outcomes) {
    r.solved += o.solved ? 1 : 0;
    ret += o.episode_return;
    len += o.length;
  }
  if (r.episodes > 0) {
    const auto n = static_cast<double>(r.episodes);
    r.solved_fraction = static_cast<double>(r.solved) / n;
    r.mean_return = ret / n;
    r.mean_length = len / n;
  }
  r.ci_half_width = binomial_half_width(r.solved, r.episodes);
  return r;
}

std::vector<EpisodeOutcome> run_levels(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                       const data::LevelSet& levels, const EvalOptions& options, int forced_noops) {
  const auto start = level_start(levels, options);
  const auto count = static_cast<std::int64_t>(levels.size()) * options.episodes_per_level;
  return run_network(net, params, count, start, options, forced_noops);
}

EvalReport evaluate(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params, const data::LevelSet& levels,
                    const EvalOptions& options) {
  return aggregate(level_set_name(levels), run_levels(net, params, levels, options));
}

EvalReport evaluate_environment(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                const env::EnvironmentFactory& factory, std::int64_t episodes,
                                const EvalOptions& options, const std::string& name, int forced_noops) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  const std::uint64_t reset_base = splitmix64(options.seed);
  const auto start = [&](std::int64_t i, std::unique_ptr<env::Environment>& out) {
    out = factory();
    return out->reset(derive_seed(reset_base, static_cast<std::uint64_t>(i)));
  };
  return aggregate(name, run_network(net, params, episodes, start, options, forced_noops));
}

EvalReport evaluate_policy(const data::PolicyFactory& policy, const data::LevelSet& levels,
                           const EvalOptions& options) {
  if (levels.empty()) throw std::invalid_argument("evaluate: empty level set");
  if (options.episodes_per_level < 1) throw std::invalid_argument("evaluate: episodes_per_level must be >= 1");
  std::vector<EpisodeOutcome> outcomes;
  std::uint64_t i = 0;
  for (const auto& entry : levels.levels) {
    for (int e = 0; e < options.episodes_per_level; ++e, ++i) {
      env::SokobanEnv env([](std::uint64_t) -> env::SokobanLevel { throw std::logic_error("unused"); },
                          options.episode_cap);
      env.reset_level(entry.level);
      const auto act = policy(derive_seed(options.seed, i));
      EpisodeOutcome o;
      while (!env.done()) {
        const auto step = env.step(act(env));
        o.episode_return += step.reward;
        o.solved = step.solved;
      }
      o.length = env.steps();
      outcomes.push_back(o);
    }
  }
  return aggregate(level_set_name(levels), outcomes);
}

net::DrcState<float> state_after(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                 const env::SokobanLevel& level, int forced_noops, int env_steps,
                                 const EvalOptions& options) {
  env::SokobanEnv env([](std::uint64_t) -> env::SokobanLevel { throw std::logic_error("unused"); },
                      options.episode_cap);
  auto obs = env.reset_level(level);
  auto state = net.zero_state(1);
  Rng rng = make_rng(derive_seed(options.seed, 0));
  const int actions = net.config().action_count;
  for (int t = 0; t < env_steps && !env.done(); ++t) {
    const auto out = net.forward(params, state, obs.reshaped(nn::Shape{1, obs.dim(0), obs.dim(1), obs.dim(2)}));
    state = out.state;
    const int a = t < forced_noops ? env::kNoop
                                   : rl::select_action(std::span<const float>(out.logits.data(),
                                                                              static_cast<std::size_t>(actions)),
                                                       rng, options.mode);
    obs = env.step(a).observation;
  }
  return state;
}

std::string ThinkingCurve::json() const {
  Json j;
  j["level_ids"] = level_ids;
  Json entries = Json::array();
  for (const auto& [k, r] : reports) {
    Json e = report_json(r);
    e["forced_noops"] = k;
    entries.push_back(e);
  }
  j["curve"] = entries;
  return j.dump();
}

ThinkingCurve thinking_steps_eval(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                  const data::LevelSet& levels, int k_max, const EvalOptions& options) {
  if (k_max < 0) throw std::invalid_argument("thinking_steps_eval: k_max must be >= 0");
  ThinkingCurve curve;
  for (const auto& e : levels.levels) curve.level_ids.push_back(e.id);
  for (int k = 0; k <= k_max; ++k) {
    curve.reports[k] = aggregate(level_set_name(levels), run_levels(net, params, levels, options, k));
  }
  return curve;
}

double generalization_gap(const EvalReport& train, const EvalReport& test) {
  return test.solved_fraction - train.solved_fraction;
}

std::string ExtrapolationReport::json() const {
  Json entries = Json::array();
  for (const auto& r : results) {
    Json e = report_json(r.report);
    e["boxes"] = r.boxes;
    e["delta"] = r.delta;
    entries.push_back(e);
  }
  return Json{{"extrapolation", entries}}.dump();
}

data::LevelSet extrapolation_levels(int boxes, std::int64_t count, std::uint64_t seed,
                                    data::GeneratorConfig generator) {
  generator.boxes = boxes;
  auto set = data::generate_levels(derive_seed(seed, static_cast<std::uint64_t>(boxes)),
                                   static_cast<std::size_t>(count), generator);
  set.split = data::Split::test;
  return set;
}

ExtrapolationReport extrapolate_boxes(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                      const std::vector<int>& box_counts, std::int64_t levels_per_count,
                                      std::uint64_t seed, const EvalOptions& options,
                                      const data::GeneratorConfig& generator) {
  if (box_counts.empty()) throw std::invalid_argument("extrapolate_boxes: no box counts");
  ExtrapolationReport out;
  for (int boxes : box_counts) {
    const auto levels = extrapolation_levels(boxes, levels_per_count, seed, generator);
    BoxCountResult r;
    r.boxes = boxes;
    r.report = evaluate(net, params, levels, options);
    r.report.level_set = std::to_string(boxes) + "_boxes";
    out.results.push_back(r);
  }
  for (auto& r : out.results) r.delta = r.report.solved_fraction - out.results.front().report.solved_fraction;
  return out;
}

data::LevelSet load_levels(const std::filesystem::path& path, const std::string& tier, const std::string& split) {
  if (std::filesystem::is_directory(path)) {
    return data::read_level_tree(path, data::parse_tier(tier), data::parse_split(split), -1);
  }
  auto set = data::read_level_file(path, -1);
  set.tier = data::parse_tier(tier);
  set.split = data::parse_split(split);
  return set;
}

data::PolicyFactory network_policy(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params,
                                   rl::ActionMode mode) {
  return [&net, &params, mode](std::uint64_t seed) -> data::EpisodePolicy {
    struct Memory {
      net::DrcState<float> state;
      Rng rng;
    };
    auto memory = std::make_shared<Memory>(Memory{net.zero_state(1), make_rng(seed)});
    return [&net, &params, mode, memory](const env::SokobanEnv& env) {
      const auto obs = env.observation();
      const auto out =
          net.forward(params, memory->state, obs.reshaped(nn::Shape{1, obs.dim(0), obs.dim(1), obs.dim(2)}));
      memory->state = out.state;
      return rl::select_action(
          std::span<const float>(out.logits.data(), static_cast<std::size_t>(net.config().action_count)),
          memory->rng, mode);
    };
  };
}

void check_parameters(const net::DrcNet<float>& net, const nn::ParameterSet<float>& params) {
  const auto shapes = net.parameter_shapes();
  if (shapes.size() != params.size()) {
    throw std::invalid_argument("checkpoint has " + std::to_string(params.size()) + " tensors, network expects " +
                                std::to_string(shapes.size()));
  }
  for (const auto& [path, shape] : shapes) {
    if (!params.contains(path)) throw std::invalid_argument("checkpoint lacks parameter " + path);
    if (params.at(path).shape() != shape) {
      throw std::invalid_argument("checkpoint parameter " + path + " has shape " + params.at(path).shape().str() +
                                  ", network expects " + shape.str());
    }
  }
}

}  // namespace drc::eval
