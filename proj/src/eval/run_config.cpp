#include "drc/eval/run_config.hpp"

#include <algorithm>
#include <array>

namespace drc::eval {

namespace {

net::DrcConfig network_defaults(const env::EnvConfig& env) {
  net::DrcConfig c;
  if (env.game == "bandit") {
    c.depth = 1;
    c.repeats = 1;
    c.encoder = {{8, 3, 1}};
    c.hidden_channels = 8;
    c.gate_channels = 32;
    c.head_hidden = 32;
  } else {
    c = net::DrcConfig::for_domain(net::parse_domain(env.game), 3, 3);
  }
  const auto shape = env.observation_shape();
  c.observation_height = static_cast<int>(shape[0]);
  c.observation_width = static_cast<int>(shape[1]);
  c.observation_channels = static_cast<int>(shape[2]);
  c.action_count = env.action_count();
  return c;
}

rl::ActionMode parse_mode(const std::string& text) {
  if (text == "sample") return rl::ActionMode::sample;
  if (text == "greedy") return rl::ActionMode::greedy;
  throw ConfigError("eval.mode must be sample or greedy, got '" + text + "'");
}

}  // namespace

EvalOptions EvalSettings::options(std::uint64_t seed, int episode_cap) const {
  EvalOptions o;
  o.episodes_per_level = episodes_per_level;
  o.mode = parse_mode(mode);
  o.seed = seed;
  o.batch = batch;
  o.episode_cap = episode_cap;
  return o;
}

RunConfig::RunConfig() { net = network_defaults(env); }

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c;
  c.apply(KeyValueFile::parse(text, origin));
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  RunConfig c;
  c.apply(KeyValueFile::load(file));
  return c;
}

void check_known_keys(const KeyValueFile& kv) {
  static const std::array<std::string, 6> sections = {"env.", "net.", "train.", "eval.", "gen.", "filter."};
  for (const auto& [key, value] : kv.values()) {
    if (key == "seed") continue;
    const bool known = std::any_of(sections.begin(), sections.end(),
                                   [&](const std::string& s) { return key.rfind(s, 0) == 0; });
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::apply(const KeyValueFile& kv) {
  check_known_keys(kv);
  if (kv.contains("seed")) seed = static_cast<std::uint64_t>(parse_int64("seed", kv.get("seed")));
  env.apply(kv, "env.");
  train.apply(kv, "train.");

  const net::DrcConfig derived = network_defaults(env);
  net = derived;
  net.apply(kv, "net.");
  if (net.observation_height != derived.observation_height || net.observation_width != derived.observation_width ||
      net.observation_channels != derived.observation_channels || net.action_count != derived.action_count) {
    throw ConfigError("net observation shape / action count must match env." + env.game);
  }

  auto has = [&](const std::string& k) { return kv.contains(k); };
  auto get = [&](const std::string& k) -> const std::string& { return kv.get(k); };
  if (has("eval.levels")) eval.levels = get("eval.levels");
  if (has("eval.tier")) eval.tier = get("eval.tier");
  if (has("eval.split")) eval.split = get("eval.split");
  if (has("eval.max_levels")) eval.max_levels = parse_int64("eval.max_levels", get("eval.max_levels"));
  if (has("eval.episodes")) eval.episodes = parse_int64("eval.episodes", get("eval.episodes"));
  if (has("eval.episodes_per_level")) {
    eval.episodes_per_level = parse_int("eval.episodes_per_level", get("eval.episodes_per_level"));
  }
  if (has("eval.mode")) eval.mode = get("eval.mode");
  if (has("eval.batch")) eval.batch = parse_int("eval.batch", get("eval.batch"));
  if (has("eval.k_max")) eval.k_max = parse_int("eval.k_max", get("eval.k_max"));
  if (has("eval.boxes")) eval.boxes = parse_int_list("eval.boxes", get("eval.boxes"));
  if (has("eval.levels_per_count")) {
    eval.levels_per_count = parse_int64("eval.levels_per_count", get("eval.levels_per_count"));
  }
  parse_mode(eval.mode);
  data::parse_tier(eval.tier);
  data::parse_split(eval.split);
  if (eval.episodes < 1 || eval.episodes_per_level < 1 || eval.batch < 1 || eval.k_max < 0 ||
      eval.levels_per_count < 1 || eval.max_levels < 0 || eval.boxes.empty()) {
    throw ConfigError("eval.*: counts must be positive");
  }

  auto& g = gen.generator;
  if (has("gen.size")) g.size = parse_int("gen.size", get("gen.size"));
  if (has("gen.boxes")) g.boxes = parse_int("gen.boxes", get("gen.boxes"));
  if (has("gen.walk_steps")) g.walk_steps = parse_int("gen.walk_steps", get("gen.walk_steps"));
  if (has("gen.reverse_tries")) g.reverse_tries = parse_int("gen.reverse_tries", get("gen.reverse_tries"));
  if (has("gen.reverse_steps")) g.reverse_steps = parse_int("gen.reverse_steps", get("gen.reverse_steps"));
  if (has("gen.max_attempts")) g.max_attempts = parse_int("gen.max_attempts", get("gen.max_attempts"));
  if (has("gen.certify_budget")) g.certify_budget = parse_int64("gen.certify_budget", get("gen.certify_budget"));
  if (has("gen.train_count")) gen.train_count = parse_int64("gen.train_count", get("gen.train_count"));
  if (has("gen.test_count")) gen.test_count = parse_int64("gen.test_count", get("gen.test_count"));
  if (has("gen.per_file")) gen.per_file = static_cast<std::size_t>(parse_int64("gen.per_file", get("gen.per_file")));
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (gen.train_count < 0 || gen.test_count < 0 || gen.per_file < 1) throw ConfigError("gen.*: bad counts");

  if (has("filter.policy")) filter.policy = get("filter.policy");
  if (has("filter.node_budget")) filter.node_budget = parse_int64("filter.node_budget", get("filter.node_budget"));
  if (has("filter.checkpoint")) filter.checkpoint = get("filter.checkpoint");
  if (has("filter.attempts")) filter.attempts = parse_int("filter.attempts", get("filter.attempts"));
  if (has("filter.tier")) filter.tier = get("filter.tier");
  if (filter.policy != "random" && filter.policy != "planning" && filter.policy != "agent") {
    throw ConfigError("filter.policy must be random, planning or agent");
  }
  if (filter.attempts < 0 || filter.node_budget < 1) throw ConfigError("filter.*: bad counts");
  data::parse_tier(filter.tier);
}

KeyValueFile RunConfig::to_key_values() const {
  KeyValueFile kv;
  kv.set("seed", std::to_string(seed));
  env.write(kv, "env.");
  net.write(kv, "net.");
  train.write(kv, "train.");
  kv.set("eval.levels", eval.levels);
  kv.set("eval.tier", eval.tier);
  kv.set("eval.split", eval.split);
  kv.set("eval.max_levels", std::to_string(eval.max_levels));
  kv.set("eval.episodes", std::to_string(eval.episodes));
  kv.set("eval.episodes_per_level", std::to_string(eval.episodes_per_level));
  kv.set("eval.mode", eval.mode);
  kv.set("eval.batch", std::to_string(eval.batch));
  kv.set("eval.k_max", std::to_string(eval.k_max));
  kv.set("eval.boxes", format_int_list(eval.boxes));
  kv.set("eval.levels_per_count", std::to_string(eval.levels_per_count));
  const auto& g = gen.generator;
  kv.set("gen.size", std::to_string(g.size));
  kv.set("gen.boxes", std::to_string(g.boxes));
  kv.set("gen.walk_steps", std::to_string(g.walk_steps));
  kv.set("gen.reverse_tries", std::to_string(g.reverse_tries));
  kv.set("gen.reverse_steps", std::to_string(g.reverse_steps));
  kv.set("gen.max_attempts", std::to_string(g.max_attempts));
  kv.set("gen.certify_budget", std::to_string(g.certify_budget));
  kv.set("gen.train_count", std::to_string(gen.train_count));
  kv.set("gen.test_count", std::to_string(gen.test_count));
  kv.set("gen.per_file", std::to_string(gen.per_file));
  kv.set("filter.policy", filter.policy);
  kv.set("filter.node_budget", std::to_string(filter.node_budget));
  kv.set("filter.checkpoint", filter.checkpoint);
  kv.set("filter.attempts", std::to_string(filter.attempts));
  kv.set("filter.tier", filter.tier);
  return kv;
}

}  // namespace drc::eval
