#pragma once

#include "drc/net/config.hpp"
#include "drc/nn/graph.hpp"
#include "drc/nn/ops.hpp"
#include "drc/nn/parameters.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace drc::net {

using nn::Index;

/// Recurrent state (c_1..c_D, h_1..h_D). Every tensor is [B, H, W, C] with
/// the encoder-output spatial size (1 x 1 for the vector LSTM).
template <typename Scalar>
struct DrcState {
  std::vector<nn::Tensor<Scalar>> cell;
  std::vector<nn::Tensor<Scalar>> hidden;

  Index batch() const { return hidden.empty() ? 0 : hidden.front().dim(0); }
  int depth() const { return static_cast<int>(hidden.size()); }

  /// Batch entry `b` as a batch-1 state.
  DrcState select(Index b) const;
  /// Zeroes batch entry `b` (episode boundary).
  void reset(Index b);
  /// Concatenates batch-k states along the batch dimension.
  static DrcState stack(std::span<const DrcState> parts);

  bool operator==(const DrcState&) const = default;
};

/// Appends a channel holding 1 on the spatial border and 0 inside.
/// Accepts [H, W, C] or [B, H, W, C].
template <typename Scalar>
nn::Tensor<Scalar> boundary_pad_channel(const nn::Tensor<Scalar>& input);

/// [B, H, W, 1] border indicator.
template <typename Scalar>
nn::Tensor<Scalar> boundary_channel(Index batch, Index height, Index width);

struct ParamCountItem {
  std::string component;
  Index count = 0;
};

struct ParamCountReport {
  std::vector<ParamCountItem> items;
  Index total = 0;

  std::string text() const;
  std::string json() const;
};

/// Itemized trainable-parameter count; a pure function of the config.
ParamCountReport count_parameters(const DrcConfig& config);

/// Deep Repeated ConvLSTM network: encoder, D stacked memory modules ticked
/// N times per step, and an MLP producing policy logits and a value.
///
/// The building blocks record onto an nn::Graph so the same code path serves
/// actor inference (non-recording graph) and learner BPTT.
template <typename Scalar>
class DrcNet {
 public:
  using T = nn::Tensor<Scalar>;
  using V = nn::Var<Scalar>;
  using G = nn::Graph<Scalar>;
  using P = nn::ParameterSet<Scalar>;

  struct GraphState {
    std::vector<V> cell;
    std::vector<V> hidden;
  };
  struct Heads {
    V logits;  // [B, A]
    V value;   // [B, 1]
  };
  struct Output {
    T logits;  // [B, A]
    T value;   // [B]
    DrcState<Scalar> state;
  };

  explicit DrcNet(DrcConfig config);

  const DrcConfig& config() const { return config_; }
  Index encoded_height() const { return encoded_h_; }
  Index encoded_width() const { return encoded_w_; }
  Index encoded_channels() const { return config_.encoder.back().channels; }
  Index state_height() const { return is_vector() ? 1 : encoded_h_; }
  Index state_width() const { return is_vector() ? 1 : encoded_w_; }
  Index state_channels() const { return is_vector() ? config_.vector_hidden : config_.hidden_channels; }

  std::map<std::string, nn::Shape> parameter_shapes() const;
  P init_parameters(std::uint64_t seed) const;
  DrcState<Scalar> zero_state(Index batch) const;

  V encode(G& g, const P& p, V observation) const;
  /// The tensor fed to the memory modules: i_t itself, or its dense
  /// compression for the vector LSTM.
  V core_input(G& g, const P& p, V encoded) const;
  std::pair<V, V> memory_step(G& g, const P& p, int depth, V input, V c_prev, V h_prev, V h_below,
                              V pool_in) const;
  V pool_and_inject(G& g, const P& p, int depth, V hidden) const;
  GraphState tick(G& g, const P& p, const GraphState& state, V input) const;
  GraphState step(G& g, const P& p, GraphState state, V input) const;
  Heads heads(G& g, const P& p, V output, V encoded) const;

  GraphState bind_state(G& g, const DrcState<Scalar>& state) const;
  DrcState<Scalar> read_state(const GraphState& state) const;

  /// Inference: one environment step for a batch of observations.
  Output forward(const P& params, const DrcState<Scalar>& state, const T& observations) const;

 private:
  bool is_vector() const { return config_.memory == MemoryKind::vector_lstm; }
  Index memory_input_channels() const;
  V zeros(G& g, const nn::Shape& shape) const { return g.constant(T(shape)); }

  DrcConfig config_;
  Index encoded_h_ = 0;
  Index encoded_w_ = 0;
};

extern template class DrcNet<float>;
extern template class DrcNet<double>;

}  // namespace drc::net
