#pragma once

// Test-only ground truth that shares no code path with the library solvers:
// policies are evaluated by iterating V <- g^pi + gamma P^pi V to round-off
// (no factorization), and the optimum is the component-wise minimum over an
// explicit odometer enumeration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "snmdp/mdp.hpp"

namespace snmdp::testing {

inline std::vector<double> neumann_policy_cost(const Mdp& mdp, const std::vector<std::size_t>& pi) {
  const std::size_t n = mdp.num_states();
  std::vector<double> v(n, 0.0), next(n);
  for (int it = 0; it < 20000; ++it) {
    double change = 0.0, scale = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double acc = 0.0;
      for (const auto& t : mdp.transitions(s, pi[s])) acc += t.prob * v[t.next];
      next[s] = mdp.cost(s, pi[s]) + mdp.gamma() * acc;
      change = std::max(change, std::abs(next[s] - v[s]));
      scale = std::max(scale, std::abs(next[s]));
    }
    v.swap(next);
    if (change <= 4.0 * std::numeric_limits<double>::epsilon() * scale) break;
  }
  return v;
}

struct OracleOptimum {
  std::vector<double> cost;
  std::vector<std::vector<std::size_t>> optimal_policies;  ///< every policy attaining the optimum to 1e-9
};

inline OracleOptimum oracle_optimum(const Mdp& mdp) {
  const std::size_t n = mdp.num_states();
  std::vector<std::size_t> digit(n, 0), pi(n);
  std::vector<std::pair<std::vector<std::size_t>, std::vector<double>>> all;
  for (;;) {
    for (std::size_t s = 0; s < n; ++s) pi[s] = mdp.actions(s)[digit[s]];
    all.emplace_back(pi, neumann_policy_cost(mdp, pi));
    std::size_t s = 0;
    while (s < n && ++digit[s] == mdp.actions(s).size()) digit[s++] = 0;
    if (s == n) break;
  }
  OracleOptimum out;
  out.cost.assign(n, std::numeric_limits<double>::infinity());
  for (const auto& [p, v] : all)
    for (std::size_t s = 0; s < n; ++s) out.cost[s] = std::min(out.cost[s], v[s]);
  for (const auto& [p, v] : all) {
    double gap = 0.0;
    for (std::size_t s = 0; s < n; ++s) gap = std::max(gap, v[s] - out.cost[s]);
    if (gap <= 1e-9) out.optimal_policies.push_back(p);
  }
  return out;
}

}  // namespace snmdp::testing
