#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "snmdp/bellman.hpp"
#include "snmdp/linalg.hpp"
#include "snmdp/mdp.hpp"
#include "snmdp/newton.hpp"
#include "snmdp/rng.hpp"

namespace snmdp {

struct OptimalSolution {
  CostVector cost;
  Policy policy;
};

/**
 * Ground truth by enumeration: evaluates every deterministic policy and
 * takes the component-wise minimum of the cost vectors. The returned policy
 * is the first one (in enumeration order) that attains that minimum in every
 * state up to 1e-9 relative; such a policy always exists.
 */
inline OptimalSolution brute_force_optimal(const Mdp& mdp, std::uint64_t cap = kDefaultPolicyCap) {
  auto policies = enumerate_policies(mdp, cap);
  std::vector<std::pair<Policy, CostVector>> evaluated;
  evaluated.reserve(policies.size());
  for (const Policy& pi : policies) evaluated.emplace_back(pi, policy_evaluation(mdp, pi));

  const std::size_t n = mdp.num_states();
  CostVector best(n, std::numeric_limits<double>::infinity());
  for (const auto& [pi, v] : evaluated)
    for (std::size_t s = 0; s < n; ++s) best[s] = std::min(best[s], v[s]);

  const double slack = 1e-9 * (1.0 + norm_inf(best));
  const Policy* attaining = nullptr;
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& [pi, v] : evaluated) {
    const double gap = distance_inf(v, best);
    if (gap < closest) {
      closest = gap;
      attaining = &pi;
    }
    if (gap <= slack) {
      attaining = &pi;
      break;
    }
  }
  return {best, *attaining};
}

struct RatioSample {
  std::size_t k = 0;  ///< ratio of error k+1 to error k
  double ratio = std::numeric_limits<double>::quiet_NaN();
  bool saturated = false;
};

/**
 * ||theta_{k+1} - V*|| / ||theta_k - V*|| for consecutive trace entries.
 * Pairs whose denominator is at the level of rounding noise,
 * <= 100 eps (1 + ||V*||), are flagged saturated and carry no ratio.
 */
inline std::vector<RatioSample> contraction_ratios(const IterationTrace& trace, std::span<const double> reference) {
  const double floor = 1e2 * std::numeric_limits<double>::epsilon() * (1.0 + norm_inf(reference));
  std::vector<RatioSample> out;
  if (trace.size() < 2) return out;
  double prev = distance_inf(trace[0].theta, reference);
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    const double next = distance_inf(trace[k + 1].theta, reference);
    RatioSample r;
    r.k = k;
    if (prev <= floor) {
      r.saturated = true;
    } else {
      r.ratio = next / prev;
    }
    out.push_back(r);
    prev = next;
  }
  return out;
}

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometric mean of the non-saturated contraction ratios in the last
/// tail_fraction of the run. Needs at least three usable ratios.
inline double empirical_rate(const IterationTrace& trace, std::span<const double> reference,
                             double tail_fraction = 0.5) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::invalid_argument("empirical_rate: tail_fraction must lie in (0,1]");
  std::vector<double> usable;
  for (const auto& r : contraction_ratios(trace, reference))
    if (!r.saturated) usable.push_back(r.ratio);
  if (usable.size() < 3)
    throw InsufficientDataError("empirical_rate: only " + std::to_string(usable.size()) +
                                " usable contraction ratios (need 3)");
  auto take = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(usable.size())));
  take = std::max<std::size_t>(1, std::min(take, usable.size()));
  double log_sum = 0.0;
  for (std::size_t i = usable.size() - take; i < usable.size(); ++i) {
    if (usable[i] == 0.0) return 0.0;
    log_sum += std::log(usable[i]);
  }
  return std::exp(log_sum / static_cast<double>(take));
}

/// ||B^{-1}(B - J)||_inf. Diagonal B is inverted by scaling, anything else by LU.
inline double kappa_value(const Matrix& b, const Matrix& j) {
  const std::size_t n = b.rows();
  Matrix diff(n, n);
  bool diagonal = true;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      diff(r, c) = b(r, c) - j(r, c);
      if (r != c && b(r, c) != 0.0) diagonal = false;
    }
  if (diagonal) {
    for (std::size_t r = 0; r < n; ++r)
      for (auto& x : diff.row(r)) x /= b(r, r);
    return norm_inf(diff);
  }
  LuFactorization lu(b);
  Matrix m(n, n);
  Vector col(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) col[r] = diff(r, c);
    Vector x = lu.solve(col);
    for (std::size_t r = 0; r < n; ++r) m(r, c) = x[r];
  }
  return norm_inf(m);
}

/// B_k produced by a strategy at theta_k.
inline Matrix strategy_matrix(const Mdp& mdp, const BStrategy& strategy, std::span<const double> theta) {
  const std::size_t n = mdp.num_states();
  if (std::holds_alternative<IdentityStrategy>(strategy)) return Matrix::identity(n);
  if (auto* s = std::get_if<ScaledIdentityStrategy>(&strategy)) {
    Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i) b(i, i) = s->alpha;
    return b;
  }
  return b_differential_element(mdp, theta).jacobian;
}

/// kappa_k = ||B_k^{-1}(B_k - J_k)||_inf along a trace, J_k the canonical B-differential element.
inline std::vector<double> kappa_sequence(const Mdp& mdp, const IterationTrace& trace, const BStrategy& strategy) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& e : trace) {
    const Matrix j = b_differential_element(mdp, e.theta).jacobian;
    out.push_back(kappa_value(strategy_matrix(mdp, strategy, e.theta), j));
  }
  return out;
}

/// Fills TraceEntry::kappa from kappa_sequence.
inline void annotate_kappa(const Mdp& mdp, IterationTrace& trace, const BStrategy& strategy) {
  auto kappas = kappa_sequence(mdp, trace, strategy);
  for (std::size_t i = 0; i < trace.size(); ++i) trace[i].kappa = kappas[i];
}

/// Global sup-norm contraction modulus of T_alpha, |alpha-1|/alpha + gamma/alpha (alpha > 0).
inline double t_alpha_modulus(double gamma, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("t_alpha_modulus: alpha must be positive");
  return std::abs(alpha - 1.0) / alpha + gamma / alpha;
}

/**
 * Predicted asymptotic rate of alpha-VI for alpha in (1/(1+gamma), 1):
 * 1 - (1-gamma)/alpha when alpha >= 1 - gamma/2, otherwise 1/alpha - 1.
 * Derived assuming P^{pi*} has real, nonnegative spectrum.
 */
inline double asymptotic_rate_prediction(double gamma, double alpha) {
  if (!(alpha > 1.0 / (1.0 + gamma) && alpha < 1.0))
    throw std::invalid_argument("asymptotic_rate_prediction: alpha must lie in (1/(1+gamma), 1)");
  return alpha >= 1.0 - gamma / 2.0 ? 1.0 - (1.0 - gamma) / alpha : 1.0 / alpha - 1.0;
}

inline constexpr std::size_t kDefaultPowerIterations = 1000;

/**
 * Power-iteration estimate of the spectral radius.
 *
 * Starts from a positive random vector and returns the geometric mean of the
 * per-step growth factors over the second half of the budget, which also
 * averages out the oscillation caused by a dominant complex pair. This is
 * an estimate only; nothing is certified.
 */
inline double spectral_radius_estimate(const Matrix& a, std::size_t iterations = kDefaultPowerIterations,
                                       std::uint64_t seed = 0) {
  if (!a.square()) throw std::invalid_argument("spectral_radius_estimate: matrix is not square");
  const std::size_t n = a.rows();
  if (n == 0 || iterations == 0) return 0.0;
  Rng rng(seed);
  Vector x(n);
  for (auto& v : x) v = 0.5 + rng.uniform01();
  const double x0 = norm_inf(x);
  for (auto& v : x) v /= x0;

  const std::size_t tail_start = iterations / 2;
  double log_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Vector y = multiply(a, x);
    const double growth = norm_inf(y);
    if (growth == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / growth;
    if (it >= tail_start) {
      log_sum += std::log(growth);
      ++count;
    }
  }
  return std::exp(log_sum / static_cast<double>(count));
}

/// I - (1/alpha)(I - gamma P^pi), the linearized alpha-VI map at a fixed point with greedy pi.
inline Matrix alpha_iteration_matrix(const Mdp& mdp, const Policy& pi, double alpha) {
  Matrix j = policy_jacobian(mdp, pi);
  const std::size_t n = j.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& x : j.row(r)) x = -x / alpha;
    j(r, r) += 1.0;
  }
  return j;
}

}  // namespace snmdp
