#pragma once

#include "drc/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drc::nn {

struct GradCheckResult {
  double max_relative_error = 0;
  double max_absolute_error = 0;
  std::string worst_path;
  Index worst_index = -1;
  Index checked = 0;
  Index missing = 0;  // trainable entries the analytic record omitted while FD saw a slope
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
/// gradient is ~0 from dominating through pure rounding noise.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares analytic gradients of `build(graph, params)` against central
/// finite differences over every trainable scalar. `params` is perturbed in
/// place and restored.
template <typename BuildLoss>
GradCheckResult gradient_check(ParameterSet<double>& params, BuildLoss&& build, double epsilon = 1e-5,
                               double floor = 1e-6) {
  GradientRecord<double> analytic = compute_gradients<double>(
      [&](Graph<double>& g) { return build(g, static_cast<const ParameterSet<double>&>(params)); });

  auto evaluate = [&]() {
    Graph<double> g(false);
    return g.value(build(g, static_cast<const ParameterSet<double>&>(params)))[0];
  };

  GradCheckResult result;
  for (auto& [path, entry] : params.entries()) {
    if (!entry.trainable) continue;
    auto it = analytic.find(path);
    for (Index i = 0; i < entry.value.size(); ++i) {
      double& x = entry.value[i];
      const double saved = x;
      x = saved + epsilon;
      const double plus = evaluate();
      x = saved - epsilon;
      const double minus = evaluate();
      x = saved;
      const double numeric = (plus - minus) / (2 * epsilon);
      double a = 0;
      if (it != analytic.end()) {
        a = it->second[i];
      } else if (numeric != 0) {
        ++result.missing;
      }
      const double rel = relative_error(a, numeric, floor);
      result.max_absolute_error = std::max(result.max_absolute_error, std::abs(a - numeric));
      if (rel > result.max_relative_error || result.worst_index < 0) {
        result.max_relative_error = std::max(result.max_relative_error, rel);
        if (rel >= result.max_relative_error) {
          result.worst_path = path;
          result.worst_index = i;
        }
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace drc::nn
