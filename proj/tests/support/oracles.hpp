#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace drc::test {

/// n-step bootstrapped return from s with per-step discounts (0 at a done).
inline double n_step_return(const std::vector<double>& rewards, const std::vector<double>& discounts,
                            const std::vector<double>& values, double bootstrap, std::size_t s, std::size_t n) {
  const std::size_t T = rewards.size();
  double g = 0, k = 1;
  for (std::size_t i = 0; i < n; ++i) {
    g += k * rewards[s + i];
    k *= discounts[s + i];
  }
  const double tail = s + n < T ? values[s + n] : bootstrap;
  return g + k * tail;
}

/// Truncated lambda-return as an explicit mixture of n-step returns:
/// sum_{n<m} (1 - l) l^(n-1) G(n) + l^(m-1) G(m), m = steps left in the tape.
inline std::vector<double> brute_force_lambda_returns(const std::vector<double>& rewards,
                                                      const std::vector<double>& discounts,
                                                      const std::vector<double>& values, double bootstrap,
                                                      double lambda) {
  const std::size_t T = rewards.size();
  std::vector<double> out(T);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t m = T - s;
    double total = 0;
    for (std::size_t n = 1; n < m; ++n)
      total += (1 - lambda) * std::pow(lambda, static_cast<double>(n - 1)) *
               n_step_return(rewards, discounts, values, bootstrap, s, n);
    total += std::pow(lambda, static_cast<double>(m - 1)) * n_step_return(rewards, discounts, values, bootstrap, s, m);
    out[s] = total;
  }
  return out;
}

}  // namespace drc::test
