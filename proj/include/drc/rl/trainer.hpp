#pragma once

#include "drc/env/factory.hpp"
#include "drc/net/drc.hpp"
#include "drc/nn/adam.hpp"
#include "drc/rl/actor.hpp"
#include "drc/rl/config.hpp"
#include "drc/rl/learner.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace drc::rl {

struct UpdateRecord {
  std::int64_t update = 0;  // 1-based count of completed updates
  std::int64_t env_steps = 0;
  UpdateStats stats;
  int episodes = 0;  // episodes that ended in this batch
  int solved = 0;
  double mean_return = 0;
  double mean_length = 0;

  /// One metrics line; every field is a pure function of config and seed.
  std::string json() const;
};

struct TrainResult {
  nn::ParameterSet<float> params;
  nn::AdamState<float> adam;
  std::int64_t updates = 0;
  std::int64_t env_steps = 0;
  bool stopped_early = false;
};

/// Called after each update; returning false stops training.
using UpdateCallback = std::function<bool(const UpdateRecord&, const nn::ParameterSet<float>&)>;

/// Actor threads feed a bounded queue; a single learner consumes batches.
///
/// Slot j is owned by actor j % K. Round r of every slot acts with the
/// parameters published after update max(0, r - lag), and update u consumes
/// exactly round u of every slot in slot order, so results do not depend on
/// thread timing.
class Trainer {
 public:
  Trainer(net::DrcConfig net_config, env::EnvironmentFactory environments, TrainConfig config, std::uint64_t seed);

  /// Starts from given parameters (and optimizer state) instead of a fresh init.
  void set_initial(nn::ParameterSet<float> params, std::optional<nn::AdamState<float>> adam = std::nullopt);

  /// With a non-empty `out_dir`, writes metrics.jsonl, diagnostics.jsonl,
  /// periodic checkpoints under checkpoints/ and final.ckpt.
  TrainResult run(const std::filesystem::path& out_dir = {}, const UpdateCallback& on_update = {});

  const net::DrcNet<float>& net() const { return net_; }
  const TrainConfig& config() const { return config_; }

 private:
  net::DrcNet<float> net_;
  env::EnvironmentFactory environments_;
  TrainConfig config_;
  std::uint64_t seed_;
  std::optional<nn::ParameterSet<float>> initial_params_;
  std::optional<nn::AdamState<float>> initial_adam_;
};

}  // namespace drc::rl
