#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "snmdp/linalg.hpp"
#include "snmdp/mdp.hpp"

namespace snmdp {

/// Relative tie tolerance for greedy selection: Q-values within
/// kTieTolerance * max(1, |Q_min|) of the minimum count as minimizers.
inline constexpr double kTieTolerance = 1e-9;

namespace detail {

inline void check_length(const Mdp& mdp, std::size_t len) {
  if (len != mdp.num_states())
    throw std::invalid_argument("cost vector has length " + std::to_string(len) + ", expected " +
                                std::to_string(mdp.num_states()));
}

/// g(s,a) + gamma * sum_s' p(s'|s,a) theta(s') for one flat row.
inline double q_value(const Mdp& mdp, std::size_t row, std::span<const double> theta) {
  double acc = 0.0;
  for (const auto& t : mdp.row(row)) acc += t.prob * theta[t.next];
  return mdp.row_cost(row) + mdp.gamma() * acc;
}

}  // namespace detail

/// T(theta), the greedy policy at theta and the per-state tie flags, from one sweep.
struct BellmanImage {
  CostVector value;
  Policy policy;
  std::vector<bool> tie;
};

/**
 * One sweep over all admissible rows.
 *
 * value(s) is the exact minimum Q-value. The policy picks, at each state, the
 * lowest action index whose Q-value lies within the tie tolerance of that
 * minimum; tie(s) is set when two or more actions do.
 */
inline BellmanImage bellman_image(const Mdp& mdp, std::span<const double> theta) {
  detail::check_length(mdp, theta.size());
  const std::size_t n = mdp.num_states();
  BellmanImage out{CostVector(n), Policy(std::vector<std::size_t>(n)), std::vector<bool>(n, false)};
  std::vector<double> q;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t begin = mdp.first_row(s), end = mdp.first_row(s + 1);
    q.resize(end - begin);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = begin; r < end; ++r) {
      q[r - begin] = detail::q_value(mdp, r, theta);
      best = std::min(best, q[r - begin]);
    }
    const double band = kTieTolerance * std::max(1.0, std::abs(best));
    std::size_t chosen = end, count = 0;
    for (std::size_t r = begin; r < end; ++r) {
      if (q[r - begin] - best <= band) {
        if (chosen == end) chosen = r;
        ++count;
      }
    }
    out.value[s] = best;
    out.policy.action[s] = mdp.row_action(chosen);
    out.tie[s] = count >= 2;
  }
  return out;
}

/// (T theta)(s) = min over admissible a of g(s,a) + gamma * p(.|s,a) . theta
inline CostVector apply_bellman(const Mdp& mdp, std::span<const double> theta) {
  return bellman_image(mdp, theta).value;
}

/// T^pi theta = g^pi + gamma P^pi theta
inline CostVector apply_policy_bellman(const Mdp& mdp, const Policy& pi, std::span<const double> theta) {
  check_policy(mdp, pi);
  detail::check_length(mdp, theta.size());
  CostVector out(mdp.num_states());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = detail::q_value(mdp, *mdp.row_index(s, pi[s]), theta);
  return out;
}

struct GreedyResult {
  Policy policy;
  std::vector<bool> tie;
};

inline GreedyResult greedy_policy(const Mdp& mdp, std::span<const double> theta) {
  auto img = bellman_image(mdp, theta);
  return {std::move(img.policy), std::move(img.tie)};
}

/// Bellman residual r(theta) = theta - T theta. Its unique root is V*.
inline CostVector residual(const Mdp& mdp, std::span<const double> theta) {
  CostVector out = apply_bellman(mdp, theta);
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = theta[s] - out[s];
  return out;
}

/// I - gamma * P^pi.
inline Matrix policy_jacobian(const Mdp& mdp, const Policy& pi) {
  Matrix j = induced_dynamics(mdp, pi).p_pi;
  const double g = mdp.gamma();
  for (std::size_t i = 0; i < j.rows(); ++i) {
    for (auto& x : j.row(i)) x *= -g;
    j(i, i) += 1.0;
  }
  return j;
}

struct JacobianElement {
  Matrix jacobian;
  Policy policy;
};

/**
 * Element I - gamma P^pi of the B-differential of the residual at theta, for
 * the canonical (lowest-index) greedy policy. Always nonsingular: the matrix
 * is strictly diagonally dominant by rows because gamma < 1.
 */
inline JacobianElement b_differential_element(const Mdp& mdp, std::span<const double> theta) {
  Policy pi = greedy_policy(mdp, theta).policy;
  Matrix j = policy_jacobian(mdp, pi);
  return {std::move(j), std::move(pi)};
}

namespace detail {

// Shared by apply_t_alpha and the solver so that both produce the same bits.
inline void blend_t_alpha(double alpha, std::span<const double> theta, std::span<double> t_theta) {
  const double keep = (alpha - 1.0) / alpha;
  const double take = 1.0 / alpha;
  for (std::size_t s = 0; s < theta.size(); ++s) t_theta[s] = keep * theta[s] + take * t_theta[s];
}

}  // namespace detail

/// T_alpha theta = ((alpha-1)/alpha) theta + (1/alpha) T theta. Any nonzero alpha is accepted.
inline CostVector apply_t_alpha(const Mdp& mdp, double alpha, std::span<const double> theta) {
  if (alpha == 0.0) throw std::invalid_argument("apply_t_alpha: alpha must be nonzero");
  CostVector out = apply_bellman(mdp, theta);
  detail::blend_t_alpha(alpha, theta, out);
  return out;
}

}  // namespace snmdp
