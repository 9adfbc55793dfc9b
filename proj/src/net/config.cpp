#include "drc/net/config.hpp"

namespace drc::net {

std::string to_string(MemoryKind kind) {
  switch (kind) {
    case MemoryKind::convlstm: return "convlstm";
    case MemoryKind::gated_convrnn: return "gated_convrnn";
    case MemoryKind::simple_convrnn: return "simple_convrnn";
    case MemoryKind::vector_lstm: return "vector_lstm";
  }
  return "?";
}

MemoryKind parse_memory_kind(const std::string& text) {
  if (text == "convlstm") return MemoryKind::convlstm;
  if (text == "gated_convrnn") return MemoryKind::gated_convrnn;
  if (text == "simple_convrnn") return MemoryKind::simple_convrnn;
  if (text == "vector_lstm") return MemoryKind::vector_lstm;
  throw ConfigError("unknown memory kind '" + text + "'");
}

int gate_multiple(MemoryKind kind) {
  switch (kind) {
    case MemoryKind::convlstm:
    case MemoryKind::vector_lstm: return 4;
    case MemoryKind::gated_convrnn: return 2;
    case MemoryKind::simple_convrnn: return 1;
  }
  return 1;
}

std::string to_string(Domain domain) {
  switch (domain) {
    case Domain::sokoban: return "sokoban";
    case Domain::boxworld: return "boxworld";
    case Domain::minipacman: return "minipacman";
    case Domain::gridworld: return "gridworld";
  }
  return "?";
}

Domain parse_domain(const std::string& text) {
  if (text == "sokoban") return Domain::sokoban;
  if (text == "boxworld") return Domain::boxworld;
  if (text == "minipacman") return Domain::minipacman;
  if (text == "gridworld") return Domain::gridworld;
  throw ConfigError("unknown game '" + text + "'");
}

nn::Shape observation_shape(Domain domain) {
  switch (domain) {
    case Domain::sokoban: return {80, 80, 3};
    case Domain::boxworld: return {14, 14, 3};
    case Domain::minipacman: return {15, 19, 3};
    case Domain::gridworld: return {32, 32, 1};
  }
  return {};
}

std::vector<EncoderLayer> default_encoder(Domain domain) {
  switch (domain) {
    case Domain::sokoban: return {{32, 8, 4}, {32, 4, 2}};
    case Domain::boxworld: return {{32, 3, 1}, {32, 2, 1}};
    case Domain::minipacman: return {{32, 3, 1}, {32, 3, 1}};
    case Domain::gridworld: return {{64, 3, 1}, {64, 3, 1}, {32, 2, 2}};
  }
  return {};
}

int default_action_count(Domain domain) {
  switch (domain) {
    case Domain::sokoban:
    case Domain::minipacman: return 5;
    case Domain::boxworld:
    case Domain::gridworld: return 4;
  }
  return 4;
}

DrcConfig DrcConfig::for_domain(Domain domain, int depth, int repeats) {
  DrcConfig c;
  c.depth = depth;
  c.repeats = repeats;
  c.encoder = default_encoder(domain);
  c.action_count = default_action_count(domain);
  const nn::Shape obs = net::observation_shape(domain);
  c.observation_height = static_cast<int>(obs[0]);
  c.observation_width = static_cast<int>(obs[1]);
  c.observation_channels = static_cast<int>(obs[2]);
  return c;
}

void DrcConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("DrcConfig: " + msg); };
  if (depth < 1) fail("depth must be >= 1");
  if (repeats < 1) fail("repeats must be >= 1");
  if (hidden_channels < 1) fail("hidden_channels must be >= 1");
  if (kernel_size < 1) fail("kernel_size must be >= 1");
  if (head_hidden < 1) fail("head_hidden must be >= 1");
  if (action_count < 1) fail("action_count must be >= 1");
  if (observation_height < 1 || observation_width < 1 || observation_channels < 1) fail("observation shape must be positive");
  if (encoder.empty()) fail("encoder needs at least one layer");
  for (const auto& layer : encoder) {
    if (layer.channels < 1 || layer.kernel < 1 || layer.stride < 1) fail("encoder layers need positive channels/kernel/stride");
  }
  if (memory == MemoryKind::vector_lstm) {
    if (vector_hidden < 1) fail("vector_hidden must be >= 1");
  } else if (gate_channels != gate_multiple(memory) * hidden_channels) {
    fail("gate_channels (" + std::to_string(gate_channels) + ") must equal " + std::to_string(gate_multiple(memory)) +
         " x hidden_channels for " + to_string(memory));
  }
}

void DrcConfig::apply(const KeyValueFile& kv, const std::string& prefix) {
  auto has = [&](const char* k) { return kv.contains(prefix + k); };
  auto get = [&](const char* k) { return kv.get(prefix + k); };
  auto key = [&](const char* k) { return prefix + k; };
  if (has("depth")) depth = parse_int(key("depth"), get("depth"));
  if (has("repeats")) repeats = parse_int(key("repeats"), get("repeats"));
  if (has("hidden_channels")) hidden_channels = parse_int(key("hidden_channels"), get("hidden_channels"));
  if (has("gate_channels")) gate_channels = parse_int(key("gate_channels"), get("gate_channels"));
  if (has("kernel_size")) kernel_size = parse_int(key("kernel_size"), get("kernel_size"));
  if (has("memory")) memory = parse_memory_kind(get("memory"));
  if (has("pool_and_inject")) pool_and_inject = parse_bool(key("pool_and_inject"), get("pool_and_inject"));
  if (has("top_down_skip")) top_down_skip = parse_bool(key("top_down_skip"), get("top_down_skip"));
  if (has("vision_shortcut")) vision_shortcut = parse_bool(key("vision_shortcut"), get("vision_shortcut"));
  if (has("obs_skip_all_depths")) obs_skip_all_depths = parse_bool(key("obs_skip_all_depths"), get("obs_skip_all_depths"));
  if (has("boundary_padding")) boundary_padding = parse_bool(key("boundary_padding"), get("boundary_padding"));
  if (has("pool_inject_bias")) pool_inject_bias = parse_bool(key("pool_inject_bias"), get("pool_inject_bias"));
  if (has("head_hidden")) head_hidden = parse_int(key("head_hidden"), get("head_hidden"));
  if (has("action_count")) action_count = parse_int(key("action_count"), get("action_count"));
  if (has("vector_hidden")) vector_hidden = parse_int(key("vector_hidden"), get("vector_hidden"));
  if (has("observation_height")) observation_height = parse_int(key("observation_height"), get("observation_height"));
  if (has("observation_width")) observation_width = parse_int(key("observation_width"), get("observation_width"));
  if (has("observation_channels")) observation_channels = parse_int(key("observation_channels"), get("observation_channels"));
  if (has("encoder.channels") || has("encoder.kernels") || has("encoder.strides")) {
    const auto ch = parse_int_list(key("encoder.channels"), get("encoder.channels"));
    const auto ks = parse_int_list(key("encoder.kernels"), get("encoder.kernels"));
    const auto st = parse_int_list(key("encoder.strides"), get("encoder.strides"));
    if (ch.size() != ks.size() || ch.size() != st.size()) {
      throw ConfigError(prefix + "encoder.*: channels, kernels and strides must have equal length");
    }
    encoder.clear();
    for (std::size_t i = 0; i < ch.size(); ++i) encoder.push_back({ch[i], ks[i], st[i]});
  }
  validate();
}

void DrcConfig::write(KeyValueFile& kv, const std::string& prefix) const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  kv.set(prefix + "depth", std::to_string(depth));
  kv.set(prefix + "repeats", std::to_string(repeats));
  kv.set(prefix + "hidden_channels", std::to_string(hidden_channels));
  kv.set(prefix + "gate_channels", std::to_string(gate_channels));
  kv.set(prefix + "kernel_size", std::to_string(kernel_size));
  kv.set(prefix + "memory", to_string(memory));
  kv.set(prefix + "pool_and_inject", b(pool_and_inject));
  kv.set(prefix + "top_down_skip", b(top_down_skip));
  kv.set(prefix + "vision_shortcut", b(vision_shortcut));
  kv.set(prefix + "obs_skip_all_depths", b(obs_skip_all_depths));
  kv.set(prefix + "boundary_padding", b(boundary_padding));
  kv.set(prefix + "pool_inject_bias", b(pool_inject_bias));
  kv.set(prefix + "head_hidden", std::to_string(head_hidden));
  kv.set(prefix + "action_count", std::to_string(action_count));
  kv.set(prefix + "vector_hidden", std::to_string(vector_hidden));
  kv.set(prefix + "observation_height", std::to_string(observation_height));
  kv.set(prefix + "observation_width", std::to_string(observation_width));
  kv.set(prefix + "observation_channels", std::to_string(observation_channels));
  std::vector<int> ch, ks, st;
  for (const auto& l : encoder) {
    ch.push_back(l.channels);
    ks.push_back(l.kernel);
    st.push_back(l.stride);
  }
  kv.set(prefix + "encoder.channels", format_int_list(ch));
  kv.set(prefix + "encoder.kernels", format_int_list(ks));
  kv.set(prefix + "encoder.strides", format_int_list(st));
}

}  // namespace drc::net
