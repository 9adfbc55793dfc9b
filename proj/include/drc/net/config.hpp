#pragma once

#include "drc/nn/tensor.hpp"
#include "drc/util/key_value.hpp"

#include <string>
#include <vector>

namespace drc::net {

enum class MemoryKind { convlstm, gated_convrnn, simple_convrnn, vector_lstm };

std::string to_string(MemoryKind kind);
MemoryKind parse_memory_kind(const std::string& text);

/// Gate-conv output channels per hidden channel: 4 for ConvLSTM and the
/// vector LSTM, 2 for the gated RNN, 1 for the plain RNN.
int gate_multiple(MemoryKind kind);

struct EncoderLayer {
  int channels = 32;
  int kernel = 3;
  int stride = 1;
  bool operator==(const EncoderLayer&) const = default;
};

enum class Domain { sokoban, boxworld, minipacman, gridworld };

std::string to_string(Domain domain);
Domain parse_domain(const std::string& text);

/// Observation shape (height, width, channels) of each domain.
nn::Shape observation_shape(Domain domain);
std::vector<EncoderLayer> default_encoder(Domain domain);
int default_action_count(Domain domain);

struct DrcConfig {
  int depth = 3;
  int repeats = 3;
  int hidden_channels = 32;
  int gate_channels = 128;
  int kernel_size = 3;
  MemoryKind memory = MemoryKind::convlstm;

  bool pool_and_inject = true;
  bool top_down_skip = true;
  bool vision_shortcut = true;
  bool obs_skip_all_depths = true;
  bool boundary_padding = true;
  bool pool_inject_bias = false;

  std::vector<EncoderLayer> encoder = default_encoder(Domain::sokoban);
  int head_hidden = 256;
  int action_count = 5;
  int vector_hidden = 200;  // vector_lstm: compressed-observation and LSTM width

  int observation_height = 80;
  int observation_width = 80;
  int observation_channels = 3;

  /// Architecture used for `domain` with the given depth and repeats.
  static DrcConfig for_domain(Domain domain, int depth, int repeats);

  nn::Shape observation_shape() const {
    return {observation_height, observation_width, observation_channels};
  }

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  void apply(const KeyValueFile& kv, const std::string& prefix = "net.");
  void write(KeyValueFile& kv, const std::string& prefix = "net.") const;

  bool operator==(const DrcConfig&) const = default;
};

}  // namespace drc::net
