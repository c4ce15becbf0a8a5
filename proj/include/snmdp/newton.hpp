#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "snmdp/bellman.hpp"
#include "snmdp/linalg.hpp"
#include "snmdp/mdp.hpp"

namespace snmdp {

// Choice of B_k in theta_{k+1} = theta_k - B_k^{-1} r(theta_k).

/// B_k = I. The step collapses to theta_{k+1} = T theta_k (value iteration).
struct IdentityStrategy {};

/// B_k = alpha I. The step is theta_{k+1} = T_alpha theta_k (alpha-VI).
struct ScaledIdentityStrategy {
  double alpha = 1.0;
};

/// B_k = I - gamma P^pi for the canonical greedy pi at theta_k (semismooth Newton, i.e. PI).
struct GeneralizedJacobianStrategy {};

using BStrategy = std::variant<IdentityStrategy, ScaledIdentityStrategy, GeneralizedJacobianStrategy>;

inline std::string describe(const BStrategy& strategy) {
  struct {
    std::string operator()(IdentityStrategy) const { return "identity"; }
    std::string operator()(ScaledIdentityStrategy s) const { return "scaled-identity(" + detail::format_double(s.alpha) + ")"; }
    std::string operator()(GeneralizedJacobianStrategy) const { return "generalized-jacobian"; }
  } visitor;
  return std::visit(visitor, strategy);
}

inline constexpr std::size_t kDefaultMaxItersValueIteration = 100000;
inline constexpr std::size_t kDefaultMaxItersPolicyIteration = 10000;
inline constexpr double kDivergenceBound = 1e12;

struct SolverConfig {
  /// Stop once ||r(theta_k)||_inf <= tol (times 1 + ||theta_k||_inf when relative_tol).
  double tol = 1e-10;
  bool relative_tol = false;
  std::size_t max_iters = kDefaultMaxItersValueIteration;
  bool record_trace = false;
  /// When set, each trace entry carries ||theta_k - reference||_inf.
  std::optional<CostVector> reference_solution;

  double threshold(std::span<const double> theta) const {
    return relative_tol ? tol * (1.0 + norm_inf(theta)) : tol;
  }

  void check() const {
    if (!(tol >= 0.0)) throw std::invalid_argument("SolverConfig: tol must be nonnegative");
    if (max_iters == 0) throw std::invalid_argument("SolverConfig: max_iters must be positive");
  }
};

struct TraceEntry {
  CostVector theta;
  double residual_inf = 0.0;
  std::optional<Policy> policy;
  std::optional<double> error_inf;
  std::optional<double> kappa;
  double wall_time_us = 0.0;
};

/// Iterates theta_0, theta_1, ... of one run.
using IterationTrace = std::vector<TraceEntry>;

enum class SolveStatus { converged, max_iterations, diverged, stalled };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::stalled: return "stalled";
  }
  return "unknown";
}

struct SolveResult {
  CostVector theta;
  Policy policy;
  std::size_t iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
  double residual_inf = 0.0;
  std::optional<IterationTrace> trace;
};

/// A linear solve broke down inside a solver.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class TraceRecorder {
 public:
  explicit TraceRecorder(const SolverConfig& config)
      : config_(config), start_(std::chrono::steady_clock::now()) {
    if (config.record_trace) trace_.emplace();
  }

  void record(std::span<const double> theta, double residual_inf, const Policy& greedy) {
    if (!trace_) return;
    TraceEntry e;
    e.theta.assign(theta.begin(), theta.end());
    e.residual_inf = residual_inf;
    e.policy = greedy;
    if (config_.reference_solution) e.error_inf = distance_inf(theta, *config_.reference_solution);
    e.wall_time_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start_).count();
    trace_->push_back(std::move(e));
  }

  std::optional<IterationTrace> take() { return std::move(trace_); }

 private:
  const SolverConfig& config_;
  std::chrono::steady_clock::time_point start_;
  std::optional<IterationTrace> trace_;
};

inline bool diverged(std::span<const double> theta) {
  for (double x : theta)
    if (!std::isfinite(x) || std::abs(x) > kDivergenceBound) return true;
  return false;
}

}  // namespace detail

/**
 * Generic semismooth Newton-type loop on the Bellman residual.
 *
 * Each iteration performs one Bellman sweep, which yields T theta_k, the
 * residual and the canonical greedy policy together. The update is then
 *   Identity:             theta_{k+1} = T theta_k
 *   ScaledIdentity(a):    theta_{k+1} = ((a-1)/a) theta_k + (1/a) T theta_k
 *   GeneralizedJacobian:  theta_{k+1} = theta_k - (I - gamma P^pi)^{-1} r(theta_k)
 * The first two are the closed forms of theta_k - B^{-1} r(theta_k) and need
 * no linear solve. The Jacobian is refactorized every iteration.
 *
 * Non-convergence is reported through the result, not thrown. A run whose
 * iterate leaves the box |theta| <= 1e12 stops with status diverged.
 */
inline SolveResult newton_type_solve(const Mdp& mdp, const BStrategy& strategy, CostVector theta0,
                                     const SolverConfig& config) {
  config.check();
  detail::check_length(mdp, theta0.size());
  if (auto* s = std::get_if<ScaledIdentityStrategy>(&strategy); s && s->alpha == 0.0)
    throw std::invalid_argument("ScaledIdentity strategy requires alpha != 0");

  detail::TraceRecorder recorder(config);
  SolveResult out;
  CostVector theta = std::move(theta0);
  std::size_t k = 0;
  for (;;) {
    if (detail::diverged(theta)) {
      out.status = SolveStatus::diverged;
      out.residual_inf = std::numeric_limits<double>::infinity();
      break;
    }
    BellmanImage img = bellman_image(mdp, theta);
    double res = 0.0;
    for (std::size_t s = 0; s < theta.size(); ++s) res = std::max(res, std::abs(theta[s] - img.value[s]));
    recorder.record(theta, res, img.policy);
    out.policy = img.policy;
    out.residual_inf = res;

    if (res <= config.threshold(theta)) {
      out.status = SolveStatus::converged;
      break;
    }
    if (k == config.max_iters) {
      out.status = SolveStatus::max_iterations;
      break;
    }

    if (std::holds_alternative<IdentityStrategy>(strategy)) {
      theta = std::move(img.value);
    } else if (auto* scaled = std::get_if<ScaledIdentityStrategy>(&strategy)) {
      detail::blend_t_alpha(scaled->alpha, theta, img.value);
      theta = std::move(img.value);
    } else {
      CostVector r(theta.size());
      for (std::size_t s = 0; s < theta.size(); ++s) r[s] = theta[s] - img.value[s];
      CostVector step;
      try {
        step = linear_solve(policy_jacobian(mdp, img.policy), r);
      } catch (const SingularMatrixError& e) {
        throw SolverError("Newton step failed at iteration " + std::to_string(k) + ": " + e.what());
      }
      for (std::size_t s = 0; s < theta.size(); ++s) theta[s] -= step[s];
    }
    ++k;
  }
  out.theta = std::move(theta);
  out.iterations = k;
  out.converged = out.status == SolveStatus::converged;
  out.trace = recorder.take();
  return out;
}

/// V^pi, the unique solution of (I - gamma P^pi) V = g^pi, by direct LU.
inline CostVector policy_evaluation(const Mdp& mdp, const Policy& pi) {
  InducedDynamics dyn = induced_dynamics(mdp, pi);
  const double g = mdp.gamma();
  Matrix& a = dyn.p_pi;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (auto& x : a.row(i)) x *= -g;
    a(i, i) += 1.0;
  }
  try {
    return linear_solve(a, dyn.g_pi);
  } catch (const SingularMatrixError& e) {
    throw SolverError(std::string("policy evaluation failed: ") + e.what());
  }
}

/**
 * Exact policy iteration.
 *
 * Alternates evaluation and canonical greedy improvement. Trace entry k is
 * the k-th evaluated cost V^{pi_k}; it coincides with iterate k+1 of the
 * generalized-Jacobian Newton solve started from any theta_0 whose greedy
 * policy is pi_0. Stops when the residual of the evaluated cost is within
 * tolerance; if improvement returns the same policy first, status is
 * stalled.
 */
inline SolveResult policy_iteration(const Mdp& mdp, Policy pi0, const SolverConfig& config) {
  config.check();
  check_policy(mdp, pi0);

  detail::TraceRecorder recorder(config);
  SolveResult out;
  Policy pi = std::move(pi0);
  std::size_t evaluations = 0;
  for (;;) {
    CostVector v = policy_evaluation(mdp, pi);
    ++evaluations;
    BellmanImage img = bellman_image(mdp, v);
    double res = 0.0;
    for (std::size_t s = 0; s < v.size(); ++s) res = std::max(res, std::abs(v[s] - img.value[s]));
    recorder.record(v, res, img.policy);
    out.theta = std::move(v);
    out.residual_inf = res;
    out.policy = img.policy;

    if (res <= config.threshold(out.theta)) {
      out.status = SolveStatus::converged;
      break;
    }
    if (evaluations >= config.max_iters) {
      out.status = SolveStatus::max_iterations;
      break;
    }
    if (img.policy == pi) {
      out.status = SolveStatus::stalled;
      break;
    }
    pi = std::move(img.policy);
  }
  out.iterations = evaluations;
  out.converged = out.status == SolveStatus::converged;
  out.trace = recorder.take();
  return out;
}

/// Policy iteration from pi_0 = greedy(0).
inline SolveResult policy_iteration(const Mdp& mdp, const SolverConfig& config) {
  return policy_iteration(mdp, greedy_policy(mdp, CostVector(mdp.num_states(), 0.0)).policy, config);
}

inline SolverConfig default_policy_iteration_config() {
  SolverConfig c;
  c.max_iters = kDefaultMaxItersPolicyIteration;
  return c;
}

/// theta_{k+1} = T theta_k; the Newton-type loop with B_k = I.
inline SolveResult value_iteration(const Mdp& mdp, CostVector theta0, const SolverConfig& config) {
  return newton_type_solve(mdp, IdentityStrategy{}, std::move(theta0), config);
}

/// Smallest alpha (exclusive) for which T_alpha is a sup-norm contraction.
inline double alpha_threshold(double gamma) { return (1.0 + gamma) / 2.0; }

/**
 * alpha-VI, the Newton-type loop with B_k = alpha I.
 *
 * Without `force`, alpha must exceed (1 + gamma)/2, where T_alpha contracts
 * with modulus |alpha-1|/alpha + gamma/alpha. `force` admits any nonzero
 * alpha; the divergence guard then ends runs that blow up.
 */
inline SolveResult alpha_value_iteration(const Mdp& mdp, double alpha, CostVector theta0,
                                         const SolverConfig& config, bool force = false) {
  if (alpha == 0.0) throw std::invalid_argument("alpha-VI: alpha must be nonzero");
  if (!force && !(alpha > alpha_threshold(mdp.gamma())))
    throw std::invalid_argument("alpha-VI: alpha = " + detail::format_double(alpha) +
                                " is not above (1+gamma)/2 = " + detail::format_double(alpha_threshold(mdp.gamma())) +
                                "; pass force to run anyway");
  return newton_type_solve(mdp, ScaledIdentityStrategy{alpha}, std::move(theta0), config);
}

}  // namespace snmdp
