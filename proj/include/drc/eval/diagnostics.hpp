#pragma once

#include "drc/net/drc.hpp"
#include "drc/nn/gradcheck.hpp"
#include "drc/util/random.hpp"

namespace drc::eval {

/// DRC(depth, repeats) on a 4x4x4 observation with 4 hidden channels.
net::DrcConfig gradcheck_network(int depth = 2, int repeats = 2);

/// Finite-difference check of the full network in double precision: random
/// parameters, state and two observations; the loss sums log-probabilities
/// and squared values over both steps. Central differences on this loss carry
/// ~1e-9 of rounding noise, so entries below `floor` are judged on that scale.
nn::GradCheckResult drc_gradient_check(const net::DrcConfig& config, std::uint64_t seed, double epsilon = 1e-5,
                                       double floor = 1e-4);

}  // namespace drc::eval
