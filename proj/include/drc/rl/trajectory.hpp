#pragma once

#include "drc/env/environment.hpp"
#include "drc/net/drc.hpp"

#include <cstdint>
#include <vector>

namespace drc::rl {

struct EpisodeSummary {
  double episode_return = 0;
  int length = 0;
  bool solved = false;
  bool operator==(const EpisodeSummary&) const = default;
};

/// One unroll of a single environment slot. Everything the learner needs to
/// replay the forward pass exactly is kept: the initial recurrent state and
/// every observation, with done flags marking state resets.
struct Trajectory {
  int slot = 0;
  std::int64_t round = 0;
  std::int64_t policy_version = 0;
  int action_count = 0;

  net::DrcState<float> initial_state;          // batch 1
  std::vector<env::Observation> observations;  // T + 1; the last one bootstraps
  std::vector<int> actions;                    // T
  std::vector<double> rewards;                 // T
  std::vector<std::uint8_t> dones;             // T; episode ended after step t
  std::vector<float> behaviour_logits;         // T x A, row-major

  std::vector<EpisodeSummary> episodes;  // episodes that ended inside this unroll

  int length() const { return static_cast<int>(actions.size()); }
  const float* logits(int t) const { return behaviour_logits.data() + static_cast<std::size_t>(t) * action_count; }
  void validate() const;

  bool operator==(const Trajectory&) const = default;
};

}  // namespace drc::rl
