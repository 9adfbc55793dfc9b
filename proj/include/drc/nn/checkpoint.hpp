#pragma once

#include "drc/nn/adam.hpp"
#include "drc/nn/parameters.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace drc::nn {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ParameterSet<float> params;
  std::optional<AdamState<float>> adam;
};

/// Binary layout is documented in docs/checkpoint_format.md.
std::string encode_checkpoint(const ParameterSet<float>& params, const AdamState<float>* adam);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& file, const ParameterSet<float>& params,
                     const AdamState<float>* adam = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace drc::nn
