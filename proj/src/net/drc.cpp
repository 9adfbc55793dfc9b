#include "drc/net/drc.hpp"

#include "drc/nn/init.hpp"
#include "drc/util/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace drc::net {

using nn::Padding;
using nn::Shape;
using nn::Tensor;

namespace {

std::string depth_prefix(int d) { return "core." + std::to_string(d) + "."; }

}  // namespace

// ---------------------------------------------------------------------------
// DrcState

template <typename Scalar>
DrcState<Scalar> DrcState<Scalar>::select(Index b) const {
  auto pick = [b](const Tensor<Scalar>& t) {
    const Index stride = t.size() / t.dim(0);
    Shape s({1, t.dim(1), t.dim(2), t.dim(3)});
    return Tensor<Scalar>(s, t.vec().segment(b * stride, stride));
  };
  DrcState out;
  for (const auto& c : cell) out.cell.push_back(pick(c));
  for (const auto& h : hidden) out.hidden.push_back(pick(h));
  return out;
}

template <typename Scalar>
void DrcState<Scalar>::reset(Index b) {
  auto zero = [b](Tensor<Scalar>& t) {
    const Index stride = t.size() / t.dim(0);
    t.vec().segment(b * stride, stride).setZero();
  };
  for (auto& c : cell) zero(c);
  for (auto& h : hidden) zero(h);
}

template <typename Scalar>
DrcState<Scalar> DrcState<Scalar>::stack(std::span<const DrcState> parts) {
  if (parts.empty()) throw std::invalid_argument("DrcState::stack: no parts");
  auto join = [&](auto member, std::size_t d) {
    Index batch = 0;
    const Tensor<Scalar>& first = (parts.front().*member)[d];
    for (const auto& p : parts) batch += (p.*member)[d].dim(0);
    Tensor<Scalar> out(Shape{batch, first.dim(1), first.dim(2), first.dim(3)});
    Index offset = 0;
    for (const auto& p : parts) {
      const auto& t = (p.*member)[d];
      nn::require_same_shape(Shape{first.dim(1), first.dim(2), first.dim(3)}, Shape{t.dim(1), t.dim(2), t.dim(3)},
                             "DrcState::stack");
      out.vec().segment(offset, t.size()) = t.vec();
      offset += t.size();
    }
    return out;
  };
  DrcState out;
  for (std::size_t d = 0; d < parts.front().cell.size(); ++d) out.cell.push_back(join(&DrcState::cell, d));
  for (std::size_t d = 0; d < parts.front().hidden.size(); ++d) out.hidden.push_back(join(&DrcState::hidden, d));
  return out;
}

// ---------------------------------------------------------------------------
// Boundary feature

template <typename Scalar>
Tensor<Scalar> boundary_channel(Index batch, Index height, Index width) {
  Tensor<Scalar> out(Shape{batch, height, width, 1});
  for (Index b = 0; b < batch; ++b) {
    for (Index y = 0; y < height; ++y) {
      for (Index x = 0; x < width; ++x) {
        const bool edge = y == 0 || x == 0 || y == height - 1 || x == width - 1;
        out.at(b, y, x, 0) = edge ? Scalar(1) : Scalar(0);
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> boundary_pad_channel(const Tensor<Scalar>& input) {
  const bool batched = input.rank() == 4;
  if (input.rank() != 3 && !batched) {
    throw nn::ShapeError("boundary_pad_channel: expected [H, W, C] or [B, H, W, C], got " + input.shape().str());
  }
  const Index batch = batched ? input.dim(0) : 1;
  const int o = batched ? 1 : 0;
  const Index h = input.dim(o), w = input.dim(o + 1), c = input.dim(o + 2);
  const Tensor<Scalar> border = boundary_channel<Scalar>(batch, h, w);
  Tensor<Scalar> out(batched ? Shape{batch, h, w, c + 1} : Shape{h, w, c + 1});
  auto om = out.matrix();
  om.leftCols(c) = input.matrix();
  om.col(c) = border.vec();
  return out;
}

template Tensor<float> boundary_channel<float>(Index, Index, Index);
template Tensor<double> boundary_channel<double>(Index, Index, Index);
template Tensor<float> boundary_pad_channel(const Tensor<float>&);
template Tensor<double> boundary_pad_channel(const Tensor<double>&);

// ---------------------------------------------------------------------------
// Parameter counting

std::string ParamCountReport::text() const {
  std::ostringstream out;
  for (const auto& item : items) out << item.component << "\t" << item.count << "\n";
  out << "total\t" << total << "\n";
  return out.str();
}

std::string ParamCountReport::json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  for (const auto& item : items) comps.push_back({{"component", item.component}, {"count", item.count}});
  j["components"] = comps;
  j["total"] = total;
  return j.dump(2);
}

ParamCountReport count_parameters(const DrcConfig& config) {
  const DrcNet<float> net(config);
  const auto shapes = net.parameter_shapes();
  auto component = [](const std::string& path) {
    if (path.rfind("encoder.", 0) == 0) return std::string("encoder");
    if (path.rfind("core.compress.", 0) == 0) return std::string("core.compress");
    if (path.rfind("core.", 0) == 0) {
      const auto dot = path.find('.', 5);
      const std::string depth = path.substr(5, dot - 5);
      const std::string rest = path.substr(dot + 1);
      const std::string kind = rest.rfind("pool.", 0) == 0 ? "pool_and_inject" : "memory";
      return "core.depth" + depth + "." + kind;
    }
    return path.substr(0, path.rfind('.'));
  };
  ParamCountReport report;
  std::map<std::string, Index> by_component;
  std::vector<std::string> order;
  for (const auto& [path, shape] : shapes) {
    const std::string c = component(path);
    if (!by_component.count(c)) order.push_back(c);
    by_component[c] += shape.numel();
    report.total += shape.numel();
  }
  auto rank = [](const std::string& c) { return c == "encoder" ? 0 : c.rfind("core.", 0) == 0 ? 1 : 2; };
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
  for (const auto& c : order) report.items.push_back({c, by_component[c]});
  return report;
}

// ---------------------------------------------------------------------------
// DrcNet

template <typename Scalar>
DrcNet<Scalar>::DrcNet(DrcConfig config) : config_(std::move(config)) {
  config_.validate();
  Index h = config_.observation_height;
  Index w = config_.observation_width;
  for (const auto& layer : config_.encoder) {
    h = nn::conv_output_size(h, layer.kernel, layer.stride, Padding::same);
    w = nn::conv_output_size(w, layer.kernel, layer.stride, Padding::same);
  }
  encoded_h_ = h;
  encoded_w_ = w;
  if (!is_vector() && config_.boundary_padding && (h < 2 || w < 2)) {
    throw ConfigError("DrcConfig: boundary padding needs encoded spatial dims >= 2");
  }
}

template <typename Scalar>
Index DrcNet<Scalar>::memory_input_channels() const {
  if (is_vector()) return 3 * config_.vector_hidden;
  Index c = encoded_channels() + 2 * config_.hidden_channels;
  if (config_.pool_and_inject) c += config_.hidden_channels;
  if (config_.boundary_padding) c += 1;
  return c;
}

template <typename Scalar>
std::map<std::string, Shape> DrcNet<Scalar>::parameter_shapes() const {
  std::map<std::string, Shape> shapes;
  Index in_c = config_.observation_channels;
  for (std::size_t l = 0; l < config_.encoder.size(); ++l) {
    const auto& layer = config_.encoder[l];
    const std::string base = "encoder." + std::to_string(l) + ".";
    shapes.emplace(base + "w", Shape{layer.kernel, layer.kernel, in_c, layer.channels});
    shapes.emplace(base + "b", Shape{layer.channels});
    in_c = layer.channels;
  }
  const Index encoded_size = encoded_h_ * encoded_w_ * encoded_channels();
  if (is_vector()) {
    const Index vh = config_.vector_hidden;
    shapes.emplace("core.compress.w", Shape{encoded_size, vh});
    shapes.emplace("core.compress.b", Shape{vh});
    for (int d = 0; d < config_.depth; ++d) {
      shapes.emplace(depth_prefix(d) + "gates.w", Shape{1, 1, memory_input_channels(), 4 * vh});
      shapes.emplace(depth_prefix(d) + "gates.b", Shape{4 * vh});
    }
  } else {
    const Index hc = config_.hidden_channels;
    for (int d = 0; d < config_.depth; ++d) {
      shapes.emplace(depth_prefix(d) + "gates.w",
                     Shape{config_.kernel_size, config_.kernel_size, memory_input_channels(), config_.gate_channels});
      shapes.emplace(depth_prefix(d) + "gates.b", Shape{config_.gate_channels});
      if (config_.pool_and_inject) {
        shapes.emplace(depth_prefix(d) + "pool.w", Shape{2 * hc, hc});
        if (config_.pool_inject_bias) shapes.emplace(depth_prefix(d) + "pool.b", Shape{hc});
      }
    }
  }
  Index features = state_height() * state_width() * state_channels();
  if (config_.vision_shortcut) features += encoded_size;
  shapes.emplace("head.hidden.w", Shape{features, config_.head_hidden});
  shapes.emplace("head.hidden.b", Shape{config_.head_hidden});
  shapes.emplace("head.policy.w", Shape{config_.head_hidden, config_.action_count});
  shapes.emplace("head.policy.b", Shape{config_.action_count});
  shapes.emplace("head.value.w", Shape{config_.head_hidden, 1});
  shapes.emplace("head.value.b", Shape{1});
  return shapes;
}

template <typename Scalar>
nn::ParameterSet<Scalar> DrcNet<Scalar>::init_parameters(std::uint64_t seed) const {
  Rng rng = make_rng(seed);
  nn::ParameterSet<Scalar> params;
  for (const auto& [path, shape] : parameter_shapes()) {
    const bool is_bias = path.size() >= 2 && path.compare(path.size() - 2, 2, ".b") == 0;
    if (is_bias) {
      params.add(path, Tensor<Scalar>(shape));
    } else {
      params.add(path, nn::fan_in_uniform<double>(shape, rng).template cast<Scalar>());
    }
  }
  return params;
}

template <typename Scalar>
DrcState<Scalar> DrcNet<Scalar>::zero_state(Index batch) const {
  DrcState<Scalar> s;
  const Shape shape{batch, state_height(), state_width(), state_channels()};
  for (int d = 0; d < config_.depth; ++d) {
    s.cell.emplace_back(shape);
    s.hidden.emplace_back(shape);
  }
  return s;
}

template <typename Scalar>
auto DrcNet<Scalar>::encode(G& g, const P& p, V observation) const -> V {
  const Shape& s = observation.shape();
  const Shape expected = config_.observation_shape();
  const int o = s.rank() == 4 ? 1 : 0;
  if (s.rank() != 3 && s.rank() != 4) {
    throw nn::ShapeError("encode: observation must be [H, W, C] or [B, H, W, C], got " + s.str());
  }
  for (int i = 0; i < 3; ++i) {
    if (s[o + i] != expected[i]) {
      throw nn::ShapeError("encode: observation dimension " + std::to_string(o + i) + " is " + std::to_string(s[o + i]) +
                           ", expected " + std::to_string(expected[i]) + " (observation shape " + expected.str() + ")");
    }
  }
  V x = observation;
  for (std::size_t l = 0; l < config_.encoder.size(); ++l) {
    const std::string base = "encoder." + std::to_string(l) + ".";
    x = nn::relu(nn::conv2d(x, g.parameter(p, base + "w"), g.parameter(p, base + "b"), config_.encoder[l].stride,
                            Padding::same));
  }
  return x;
}

template <typename Scalar>
auto DrcNet<Scalar>::core_input(G& g, const P& p, V encoded) const -> V {
  if (!is_vector()) return encoded;
  const Index batch = encoded.shape()[0];
  V flat = nn::flatten(encoded);
  V compressed = nn::relu(nn::dense(flat, g.parameter(p, "core.compress.w"), g.parameter(p, "core.compress.b")));
  return nn::reshape(compressed, Shape{batch, 1, 1, config_.vector_hidden});
}

template <typename Scalar>
auto DrcNet<Scalar>::pool_and_inject(G& g, const P& p, int depth, V hidden) const -> V {
  const Shape& s = hidden.shape();
  const Index batch = s[0];
  const Index hc = s[3];
  V pooled = nn::concat_last({nn::pool_spatial(hidden, nn::PoolMode::max), nn::pool_spatial(hidden, nn::PoolMode::mean)});
  V bias = config_.pool_inject_bias ? g.parameter(p, depth_prefix(depth) + "pool.b") : V{};
  V projected = nn::dense(nn::reshape(pooled, Shape{batch, 2 * hc}), g.parameter(p, depth_prefix(depth) + "pool.w"), bias);
  return nn::tile_spatial(nn::reshape(projected, Shape{batch, 1, 1, hc}), s[1], s[2]);
}

template <typename Scalar>
auto DrcNet<Scalar>::memory_step(G& g, const P& p, int depth, V input, V c_prev, V h_prev, V h_below, V pool_in) const
    -> std::pair<V, V> {
  const Shape& hs = h_prev.shape();
  for (const V& v : {input, c_prev, h_below}) {
    const Shape& s = v.shape();
    if (s.rank() != 4 || s[0] != hs[0] || s[1] != hs[1] || s[2] != hs[2]) {
      throw nn::ShapeError("memory_step: spatial mismatch " + s.str() + " vs hidden " + hs.str());
    }
  }
  std::vector<V> parts{input, h_below, h_prev};
  if (!is_vector() && config_.pool_and_inject) {
    if (!pool_in.valid()) throw std::invalid_argument("memory_step: pool-and-inject input required");
    parts.push_back(pool_in);
  }
  if (!is_vector() && config_.boundary_padding) {
    parts.push_back(g.constant(boundary_channel<Scalar>(hs[0], hs[1], hs[2])));
  }
  V stacked = nn::concat_last(std::span<const V>(parts));
  const std::string base = depth_prefix(depth);
  V gates = nn::conv2d(stacked, g.parameter(p, base + "gates.w"), g.parameter(p, base + "gates.b"), 1, Padding::same);
  const Index hc = hs[3];

  switch (config_.memory) {
    case MemoryKind::convlstm:
    case MemoryKind::vector_lstm: {
      // Gate blocks in channel order: input, forget, output, candidate.
      V in_gate = nn::sigmoid(nn::slice_last(gates, 0, hc));
      V forget = nn::sigmoid(nn::slice_last(gates, hc, hc));
      V out_gate = nn::sigmoid(nn::slice_last(gates, 2 * hc, hc));
      V candidate = nn::tanh(nn::slice_last(gates, 3 * hc, hc));
      V c = forget * c_prev + in_gate * candidate;
      V h = out_gate * nn::tanh(c);
      return {c, h};
    }
    case MemoryKind::gated_convrnn: {
      V out_gate = nn::sigmoid(nn::slice_last(gates, 0, hc));
      V candidate = nn::tanh(nn::slice_last(gates, hc, hc));
      return {c_prev, out_gate * candidate};
    }
    case MemoryKind::simple_convrnn:
      return {c_prev, nn::tanh(gates)};
  }
  throw std::logic_error("memory_step: unknown memory kind");
}

template <typename Scalar>
auto DrcNet<Scalar>::tick(G& g, const P& p, const GraphState& state, V input) const -> GraphState {
  const int depth = config_.depth;
  if (static_cast<int>(state.hidden.size()) != depth || static_cast<int>(state.cell.size()) != depth) {
    throw nn::ShapeError("tick: state depth does not match config depth " + std::to_string(depth));
  }
  GraphState next = state;
  for (int d = 0; d < depth; ++d) {
    V below;
    if (d == 0) {
      below = config_.top_down_skip ? state.hidden[static_cast<std::size_t>(depth - 1)]
                                    : zeros(g, state.hidden.front().shape());
    } else {
      below = next.hidden[static_cast<std::size_t>(d - 1)];
    }
    V x = (d == 0 || config_.obs_skip_all_depths) ? input : zeros(g, input.shape());
    const auto du = static_cast<std::size_t>(d);
    V pool = (!is_vector() && config_.pool_and_inject) ? pool_and_inject(g, p, d, state.hidden[du]) : V{};
    auto [c, h] = memory_step(g, p, d, x, state.cell[du], state.hidden[du], below, pool);
    next.cell[du] = c;
    next.hidden[du] = h;
  }
  return next;
}

template <typename Scalar>
auto DrcNet<Scalar>::step(G& g, const P& p, GraphState state, V input) const -> GraphState {
  for (int n = 0; n < config_.repeats; ++n) state = tick(g, p, state, input);
  return state;
}

template <typename Scalar>
auto DrcNet<Scalar>::heads(G& g, const P& p, V output, V encoded) const -> Heads {
  V features = nn::flatten(output);
  if (config_.vision_shortcut) features = nn::concat_last({nn::flatten(encoded), features});
  V hidden = nn::relu(nn::dense(features, g.parameter(p, "head.hidden.w"), g.parameter(p, "head.hidden.b")));
  Heads out;
  out.logits = nn::dense(hidden, g.parameter(p, "head.policy.w"), g.parameter(p, "head.policy.b"));
  out.value = nn::dense(hidden, g.parameter(p, "head.value.w"), g.parameter(p, "head.value.b"));
  return out;
}

template <typename Scalar>
auto DrcNet<Scalar>::bind_state(G& g, const DrcState<Scalar>& state) const -> GraphState {
  if (state.depth() != config_.depth) throw nn::ShapeError("bind_state: state depth mismatch");
  GraphState out;
  for (const auto& c : state.cell) out.cell.push_back(g.constant(c));
  for (const auto& h : state.hidden) out.hidden.push_back(g.constant(h));
  return out;
}

template <typename Scalar>
DrcState<Scalar> DrcNet<Scalar>::read_state(const GraphState& state) const {
  DrcState<Scalar> out;
  for (const auto& c : state.cell) out.cell.push_back(c.value());
  for (const auto& h : state.hidden) out.hidden.push_back(h.value());
  return out;
}

template <typename Scalar>
auto DrcNet<Scalar>::forward(const P& params, const DrcState<Scalar>& state, const T& observations) const -> Output {
  G g(false);
  V obs = g.constant_ref(observations);
  V encoded = encode(g, params, obs);
  GraphState s = step(g, params, bind_state(g, state), core_input(g, params, encoded));
  Heads h = heads(g, params, s.hidden.back(), encoded);
  Output out;
  out.logits = h.logits.value();
  out.value = h.value.value().reshaped(Shape{h.value.shape()[0]});
  out.state = read_state(s);
  return out;
}

template struct DrcState<float>;
template struct DrcState<double>;
template class DrcNet<float>;
template class DrcNet<double>;

}  // namespace drc::net
