#include "drc/data/filter.hpp"
#include "drc/data/generator.hpp"
#include "drc/data/solver.hpp"
#include "drc/eval/diagnostics.hpp"
#include "drc/eval/evaluate.hpp"
#include "drc/eval/run_config.hpp"
#include "drc/nn/checkpoint.hpp"
#include "drc/rl/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

namespace fs = std::filesystem;
using namespace drc;

namespace {

using Json = nlohmann::ordered_json;

struct Globals {
  std::string config;
  std::optional<long long> seed;
  std::string out;
  std::vector<std::string> overrides;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

eval::RunConfig load_config(const Globals& g) {
  KeyValueFile kv = g.config.empty() ? KeyValueFile{} : KeyValueFile::load(g.config);
  for (const auto& o : g.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    KeyValueFile one = KeyValueFile::parse(o.substr(0, eq) + " = " + o.substr(eq + 1), "--set");
    for (const auto& [k, v] : one.values()) kv.set(k, v);
  }
  if (g.seed) kv.set("seed", std::to_string(*g.seed));
  eval::RunConfig rc;
  rc.apply(kv);
  return rc;
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw UsageError("--out is required for this command");
  fs::create_directories(g.out);
  return g.out;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

void write_report(const Globals& g, const std::string& name, const std::string& json) {
  if (g.out.empty()) return;
  fs::create_directories(g.out);
  write_text(fs::path(g.out) / name, json + "\n");
}

nn::ParameterSet<float> load_params(const net::DrcNet<float>& net, const std::string& checkpoint) {
  if (checkpoint.empty()) throw UsageError("--checkpoint is required for this command");
  auto ck = nn::load_checkpoint(checkpoint);
  eval::check_parameters(net, ck.params);
  return std::move(ck.params);
}

void print_report(const eval::EvalReport& r, const std::string& label = {}) {
  std::printf("%-14s %-20s episodes %7lld  solved %7.4f +- %.4f  return %8.3f  length %6.1f\n", label.c_str(),
              r.level_set.c_str(), static_cast<long long>(r.episodes), r.solved_fraction, r.ci_half_width,
              r.mean_return, r.mean_length);
}

std::uint64_t level_base_seed(const eval::RunConfig& rc) { return splitmix64(rc.seed); }

data::LevelSet generated_test_levels(const eval::RunConfig& rc) {
  return data::generate_levels(derive_seed(level_base_seed(rc), 1), static_cast<std::size_t>(rc.gen.test_count),
                               rc.gen.generator);
}

data::LevelSet evaluation_levels(const eval::RunConfig& rc, const std::string& levels) {
  data::LevelSet set;
  if (!levels.empty()) {
    set = eval::load_levels(levels, rc.eval.tier, rc.eval.split);
  } else {
    set = generated_test_levels(rc);
    set.split = data::Split::test;
  }
  if (rc.eval.max_levels > 0 && static_cast<std::int64_t>(set.size()) > rc.eval.max_levels) {
    set.levels.resize(static_cast<std::size_t>(rc.eval.max_levels));
  }
  if (set.empty()) throw UsageError("no levels to evaluate");
  return set;
}

int cmd_train(const Globals& g, const std::string& init) {
  const auto rc = load_config(g);
  const auto out = require_out(g);
  write_text(out / "config.txt", rc.str());
  rl::Trainer trainer(rc.net, env::environment_factory(rc.env), rc.train, rc.seed);
  if (!init.empty()) {
    auto ck = nn::load_checkpoint(init);
    eval::check_parameters(trainer.net(), ck.params);
    trainer.set_initial(std::move(ck.params), std::move(ck.adam));
  }
  const std::int64_t total = rc.train.total_updates();
  const std::int64_t every = std::max<std::int64_t>(1, total / 20);
  std::int64_t episodes = 0, solved = 0;
  const auto result = trainer.run(out, [&](const rl::UpdateRecord& r, const nn::ParameterSet<float>&) {
    episodes += r.episodes;
    solved += r.solved;
    if (r.update % every == 0 || r.update == total) {
      std::printf("update %8lld  steps %11lld  loss %9.4f  entropy %6.3f  solved %6.3f (%lld episodes)\n",
                  static_cast<long long>(r.update), static_cast<long long>(r.env_steps), r.stats.loss.total,
                  r.stats.loss.mean_entropy, episodes ? static_cast<double>(solved) / static_cast<double>(episodes) : 0.0,
                  static_cast<long long>(episodes));
      std::fflush(stdout);
      episodes = solved = 0;
    }
    return true;
  });
  std::printf("trained %lld updates, %lld environment steps -> %s\n", static_cast<long long>(result.updates),
              static_cast<long long>(result.env_steps), (out / "final.ckpt").string().c_str());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& levels) {
  const auto rc = load_config(g);
  const net::DrcNet<float> net(rc.net);
  const auto params = load_params(net, checkpoint);
  const auto options = rc.eval.options(rc.seed, rc.env.episode_cap());
  const std::string path = levels.empty() ? rc.eval.levels : levels;
  eval::EvalReport report;
  if (!path.empty()) {
    report = eval::evaluate(net, params, evaluation_levels(rc, path), options);
  } else {
    report = eval::evaluate_environment(net, params, env::environment_factory(rc.env), rc.eval.episodes, options,
                                        rc.env.game);
  }
  print_report(report);
  write_report(g, "eval.json", report.json());
  return 0;
}

int cmd_think(const Globals& g, const std::string& checkpoint, const std::string& levels) {
  const auto rc = load_config(g);
  if (rc.env.game != "sokoban") throw UsageError("think-eval needs env.game = sokoban (a game with a no-op)");
  const net::DrcNet<float> net(rc.net);
  const auto params = load_params(net, checkpoint);
  const auto set = evaluation_levels(rc, levels.empty() ? rc.eval.levels : levels);
  const auto curve = eval::thinking_steps_eval(net, params, set, rc.eval.k_max,
                                               rc.eval.options(rc.seed, rc.env.episode_cap()));
  for (const auto& [k, r] : curve.reports) print_report(r, "k=" + std::to_string(k));
  write_report(g, "thinking.json", curve.json());
  return 0;
}

int cmd_extrapolate(const Globals& g, const std::string& checkpoint) {
  const auto rc = load_config(g);
  const net::DrcNet<float> net(rc.net);
  const auto params = load_params(net, checkpoint);
  const auto report = eval::extrapolate_boxes(net, params, rc.eval.boxes, rc.eval.levels_per_count, rc.seed,
                                              rc.eval.options(rc.seed, rc.env.episode_cap()), rc.gen.generator);
  for (const auto& r : report.results) {
    print_report(r.report, std::to_string(r.boxes) + " boxes");
    std::printf("%-14s delta vs %d boxes: %+.4f\n", "", report.results.front().boxes, r.delta);
  }
  write_report(g, "extrapolation.json", report.json());
  return 0;
}

int cmd_gen(const Globals& g) {
  const auto rc = load_config(g);
  const auto out = require_out(g);
  const std::uint64_t base = level_base_seed(rc);
  auto train = data::generate_levels(derive_seed(base, 0), static_cast<std::size_t>(rc.gen.train_count),
                                     rc.gen.generator);
  std::vector<std::uint64_t> seen;
  for (const auto& e : train.levels) seen.push_back(data::level_hash(e.level));
  auto test = data::generate_levels(derive_seed(base, 1), static_cast<std::size_t>(rc.gen.test_count),
                                    rc.gen.generator, seen);
  train.split = data::Split::train;
  test.split = data::Split::test;
  std::size_t files = 0;
  if (!train.empty()) files += data::write_level_tree(out, train, rc.gen.per_file).size();
  if (!test.empty()) files += data::write_level_tree(out, test, rc.gen.per_file).size();
  std::printf("generated %zu train and %zu test levels (%d boxes) in %zu files under %s\n", train.size(), test.size(),
              rc.gen.generator.boxes, files, out.string().c_str());
  return 0;
}

data::PolicyFactory filter_policy(const eval::RunConfig& rc, std::optional<net::DrcNet<float>>& net,
                                  std::optional<nn::ParameterSet<float>>& params) {
  if (rc.filter.policy == "random") return data::random_policy();
  if (rc.filter.policy == "planning") return data::planning_policy(rc.filter.node_budget);
  net.emplace(rc.net);
  params.emplace(load_params(*net, rc.filter.checkpoint));
  return eval::network_policy(*net, *params, rl::ActionMode::sample);
}

int cmd_filter(const Globals& g, const std::string& levels) {
  const auto rc = load_config(g);
  const auto out = require_out(g);
  if (levels.empty()) throw UsageError("--levels is required for filter-levels");
  std::optional<net::DrcNet<float>> net;
  std::optional<nn::ParameterSet<float>> params;
  const auto policy = filter_policy(rc, net, params);
  data::FilterConfig fc;
  fc.attempts = rc.filter.attempts;
  fc.step_cap = rc.env.sokoban.episode_cap;
  fc.seed = rc.seed;

  std::vector<data::LevelSet> inputs;
  if (fs::is_directory(levels)) {
    for (const auto split : {data::Split::train, data::Split::test}) {
      if (fs::is_directory(fs::path(levels) / "unfiltered" / data::to_string(split))) {
        inputs.push_back(data::read_level_tree(levels, data::Tier::unfiltered, split, -1));
      }
    }
    if (inputs.empty()) throw UsageError("no unfiltered/<split> directories under " + levels);
  } else {
    inputs.push_back(eval::load_levels(levels, "unfiltered", rc.eval.split));
  }
  for (const auto& in : inputs) {
    auto kept = data::filter_by_agent(in, policy, fc);
    kept.tier = data::parse_tier(rc.filter.tier);
    kept.split = in.split;
    if (!kept.empty()) data::write_level_tree(out, kept, rc.gen.per_file);
    std::printf("%s: kept %zu of %zu levels (%s policy, %d attempts) -> %s/%s\n", data::to_string(in.split).c_str(),
                kept.size(), in.size(), rc.filter.policy.c_str(), fc.attempts, rc.filter.tier.c_str(),
                data::to_string(in.split).c_str());
  }
  return 0;
}

int cmd_verify(const Globals& g, const std::string& levels) {
  const auto rc = load_config(g);
  if (levels.empty()) throw UsageError("--levels is required for verify-levels");
  std::vector<data::LevelSet> sets;
  if (fs::is_directory(levels)) {
    for (const auto tier : {data::Tier::unfiltered, data::Tier::medium, data::Tier::hard}) {
      for (const auto split : {data::Split::train, data::Split::test}) {
        if (fs::is_directory(fs::path(levels) / data::to_string(tier) / data::to_string(split))) {
          sets.push_back(data::read_level_tree(levels, tier, split, -1));
        }
      }
    }
  } else {
    sets.push_back(data::read_level_file(levels, -1));
  }
  std::int64_t total = 0, solved = 0;
  Json failures = Json::array();
  for (const auto& set : sets) {
    set.check_unique_ids();
    for (const auto& e : set.levels) {
      ++total;
      const auto r = data::solve_bfs(e.level, rc.gen.generator.certify_budget);
      if (r.status == data::SolveStatus::solved) {
        ++solved;
      } else {
        failures.push_back({{"tier", data::to_string(set.tier)}, {"split", data::to_string(set.split)},
                            {"id", e.id}, {"status", r.status == data::SolveStatus::unsolvable ? "unsolvable" : "budget"}});
      }
    }
  }
  std::printf("verified %lld levels: %lld certified solvable, %zu failed\n", static_cast<long long>(total),
              static_cast<long long>(solved), failures.size());
  write_report(g, "verify.json", Json{{"levels", total}, {"solved", solved}, {"failures", failures}}.dump());
  return failures.empty() ? 0 : 1;
}

int cmd_gradcheck(const Globals& g, int seeds, int depth, int repeats) {
  const auto rc = load_config(g);
  const auto config = eval::gradcheck_network(depth, repeats);
  double worst = 0;
  Json per_seed = Json::array();
  for (int s = 0; s < seeds; ++s) {
    const auto r = eval::drc_gradient_check(config, derive_seed(rc.seed, static_cast<std::uint64_t>(s)));
    worst = std::max(worst, r.max_relative_error + (r.missing > 0 ? 1.0 : 0.0));
    std::printf("seed %3d  checked %6lld  max rel error %.3e  (%s[%lld])\n", s, static_cast<long long>(r.checked),
                r.max_relative_error, r.worst_path.c_str(), static_cast<long long>(r.worst_index));
    per_seed.push_back({{"seed", s}, {"checked", r.checked}, {"missing", r.missing},
                        {"max_relative_error", r.max_relative_error}, {"worst_path", r.worst_path}});
  }
  const bool pass = worst < 1e-4;
  std::printf("DRC(%d,%d): worst relative error %.3e over %d seeds: %s\n", depth, repeats, worst, seeds,
              pass ? "PASS" : "FAIL");
  write_report(g, "gradcheck.json", Json{{"depth", depth}, {"repeats", repeats}, {"worst", worst}, {"seeds", per_seed}}.dump());
  return pass ? 0 : 1;
}

int cmd_param_count(const Globals& g, bool json) {
  const auto rc = load_config(g);
  const auto report = net::count_parameters(rc.net);
  std::cout << (json ? report.json() + "\n" : report.text());
  write_report(g, "param_count.json", report.json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Repeated ConvLSTM agents: training, evaluation and Sokoban level tools"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run config file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed; overrides the config's seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

  std::string checkpoint, levels, init;
  int seeds = 20, depth = 2, repeats = 2;
  bool json = false;

  auto* train = app.add_subcommand("train", "Train an agent; writes metrics.jsonl and checkpoints to --out");
  train->add_option("--init", init, "Start from this checkpoint");
  auto* evaluate = app.add_subcommand("eval", "Solve rate on a level set or on seeded environments");
  auto* think = app.add_subcommand("think-eval", "Solve rate with 0..k_max forced no-ops at episode start");
  auto* extrapolate = app.add_subcommand("extrapolate", "Solve rate on generated levels with more boxes");
  for (auto* sub : {evaluate, think, extrapolate}) sub->add_option("--checkpoint", checkpoint, "Agent checkpoint");
  for (auto* sub : {evaluate, think}) sub->add_option("--levels", levels, "Level file or tree root");
  auto* gen = app.add_subcommand("gen-levels", "Generate certified Sokoban levels into --out");
  auto* filter = app.add_subcommand("filter-levels", "Keep levels a policy cannot solve");
  filter->add_option("--levels", levels, "Level file or tree root")->required();
  auto* verify = app.add_subcommand("verify-levels", "BFS-certify every level");
  verify->add_option("--levels", levels, "Level file or tree root")->required();
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the full network");
  gradcheck->add_option("--seeds", seeds, "Number of random seeds")->check(CLI::PositiveNumber);
  gradcheck->add_option("--depth", depth)->check(CLI::PositiveNumber);
  gradcheck->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  auto* params = app.add_subcommand("param-count", "Itemized trainable parameter count");
  params->add_flag("--json", json, "Print JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(g, init);
    if (*evaluate) return cmd_eval(g, checkpoint, levels);
    if (*think) return cmd_think(g, checkpoint, levels);
    if (*extrapolate) return cmd_extrapolate(g, checkpoint);
    if (*gen) return cmd_gen(g);
    if (*filter) return cmd_filter(g, levels);
    if (*verify) return cmd_verify(g, levels);
    if (*gradcheck) return cmd_gradcheck(g, seeds, depth, repeats);
    if (*params) return cmd_param_count(g, json);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
