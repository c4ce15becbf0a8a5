#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <locale>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "snmdp/linalg.hpp"
#include "snmdp/rng.hpp"

namespace snmdp {

/// Absolute tolerance on each transition row sum.
inline constexpr double kStochasticTolerance = 1e-12;

/// Cost vector over states.
using CostVector = Vector;

struct Transition {
  std::size_t next = 0;
  double prob = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Deterministic stationary policy: one admissible action per state.
struct Policy {
  std::vector<std::size_t> action;

  Policy() = default;
  explicit Policy(std::vector<std::size_t> a) : action(std::move(a)) {}

  std::size_t size() const { return action.size(); }
  std::size_t operator[](std::size_t s) const { return action[s]; }

  friend bool operator==(const Policy&, const Policy&) = default;
};

inline std::string to_string(const Policy& pi) {
  std::string out = "[";
  for (std::size_t s = 0; s < pi.size(); ++s) {
    if (s) out += ',';
    out += std::to_string(pi[s]);
  }
  return out + "]";
}

class MdpBuilder;

/**
 * Finite discounted MDP with per-state admissible action sets.
 *
 * Each admissible (state, action) pair owns one sparse transition row and a
 * stage cost. Rows are addressed either by (s, a) or by a flat row index that
 * enumerates states in order and, within a state, its admissible actions in
 * increasing order.
 *
 * An Mdp is immutable once built. It may hold data that violates the model
 * invariants (so that validate() can report them); the loaders and the
 * random generator only hand out instances that pass validate().
 */
class Mdp {
 public:
  Mdp() = default;

  std::size_t num_states() const { return n_; }
  std::size_t num_actions() const { return m_; }
  double gamma() const { return gamma_; }
  std::size_t num_rows() const { return row_action_.size(); }

  /// Admissible actions at s, sorted ascending.
  std::span<const std::size_t> actions(std::size_t s) const {
    return {row_action_.data() + state_ptr_[s], state_ptr_[s + 1] - state_ptr_[s]};
  }

  std::size_t first_row(std::size_t s) const { return state_ptr_[s]; }
  std::size_t row_action(std::size_t row) const { return row_action_[row]; }

  std::optional<std::size_t> row_index(std::size_t s, std::size_t a) const {
    if (s >= n_) return std::nullopt;
    auto acts = actions(s);
    auto it = std::lower_bound(acts.begin(), acts.end(), a);
    if (it == acts.end() || *it != a) return std::nullopt;
    return state_ptr_[s] + static_cast<std::size_t>(it - acts.begin());
  }

  bool admissible(std::size_t s, std::size_t a) const { return row_index(s, a).has_value(); }

  std::span<const Transition> row(std::size_t r) const {
    return {entries_.data() + entry_ptr_[r], entry_ptr_[r + 1] - entry_ptr_[r]};
  }
  double row_cost(std::size_t r) const { return cost_[r]; }

  std::span<const Transition> transitions(std::size_t s, std::size_t a) const {
    return row(require_row(s, a));
  }
  double cost(std::size_t s, std::size_t a) const { return cost_[require_row(s, a)]; }

  /// Dense lookup p(s' | s, a); zero when s' is absent from the row.
  double probability(std::size_t s, std::size_t a, std::size_t next) const {
    double p = 0.0;
    for (const auto& t : transitions(s, a))
      if (t.next == next) p += t.prob;
    return p;
  }

  friend bool operator==(const Mdp&, const Mdp&) = default;

 private:
  friend class MdpBuilder;

  std::size_t require_row(std::size_t s, std::size_t a) const {
    auto r = row_index(s, a);
    if (!r)
      throw std::invalid_argument("action " + std::to_string(a) + " is not admissible in state " +
                                  std::to_string(s));
    return *r;
  }

  std::size_t n_ = 0;
  std::size_t m_ = 0;
  double gamma_ = 0.0;
  std::vector<std::size_t> state_ptr_{0};
  std::vector<std::size_t> row_action_;
  std::vector<std::size_t> entry_ptr_{0};
  std::vector<Transition> entries_;
  std::vector<double> cost_;
};

/// Thrown when an instance fails validate(); carries every violation.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string summarize(const std::vector<std::string>& v) {
    std::string out = "invalid MDP (" + std::to_string(v.size()) + " violation(s))";
    for (std::size_t i = 0; i < v.size() && i < 5; ++i) out += "; " + v[i];
    return out;
  }
  std::vector<std::string> violations_;
};

/**
 * Mutable staging area for an Mdp.
 *
 * Every state starts with all m actions admissible, zero-length rows and NaN
 * costs, so anything left unset shows up as a violation in validate().
 * Out-of-range indices are programming errors and throw immediately.
 */
class MdpBuilder {
 public:
  MdpBuilder(std::size_t n, std::size_t m, double gamma)
      : n_(n), m_(m), gamma_(gamma), allowed_(n), rows_(n * m), cost_(n * m, std::nan("")) {
    for (auto& a : allowed_) {
      a.resize(m);
      for (std::size_t i = 0; i < m; ++i) a[i] = i;
    }
  }

  MdpBuilder& set_gamma(double gamma) {
    gamma_ = gamma;
    return *this;
  }

  MdpBuilder& set_allowed(std::size_t s, std::vector<std::size_t> actions) {
    check_state(s);
    for (auto a : actions) check_action(a);
    std::sort(actions.begin(), actions.end());
    actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
    allowed_[s] = std::move(actions);
    return *this;
  }

  MdpBuilder& set_cost(std::size_t s, std::size_t a, double value) {
    cost_[slot(s, a)] = value;
    return *this;
  }

  MdpBuilder& set_row(std::size_t s, std::size_t a, std::vector<Transition> row) {
    for (const auto& t : row) check_state(t.next);
    rows_[slot(s, a)] = std::move(row);
    return *this;
  }

  /// Sets (or overwrites) a single entry p(next | s, a).
  MdpBuilder& set_transition(std::size_t s, std::size_t a, std::size_t next, double p) {
    check_state(next);
    auto& row = rows_[slot(s, a)];
    for (auto& t : row) {
      if (t.next == next) {
        t.prob = p;
        return *this;
      }
    }
    row.push_back({next, p});
    return *this;
  }

  /// Assembles the instance without validating it.
  Mdp build() const {
    Mdp out;
    out.n_ = n_;
    out.m_ = m_;
    out.gamma_ = gamma_;
    for (std::size_t s = 0; s < n_; ++s) {
      for (auto a : allowed_[s]) {
        auto row = rows_[s * m_ + a];
        std::stable_sort(row.begin(), row.end(),
                         [](const Transition& x, const Transition& y) { return x.next < y.next; });
        out.row_action_.push_back(a);
        out.cost_.push_back(cost_[s * m_ + a]);
        out.entries_.insert(out.entries_.end(), row.begin(), row.end());
        out.entry_ptr_.push_back(out.entries_.size());
      }
      out.state_ptr_.push_back(out.row_action_.size());
    }
    return out;
  }

  /// Assembles and validates; throws ValidationError on any violation.
  Mdp build_validated() const;

 private:
  void check_state(std::size_t s) const {
    if (s >= n_)
      throw std::out_of_range("state index " + std::to_string(s) + " out of range (n=" +
                              std::to_string(n_) + ")");
  }
  void check_action(std::size_t a) const {
    if (a >= m_)
      throw std::out_of_range("action index " + std::to_string(a) + " out of range (m=" +
                              std::to_string(m_) + ")");
  }
  std::size_t slot(std::size_t s, std::size_t a) const {
    check_state(s);
    check_action(a);
    return s * m_ + a;
  }

  std::size_t n_;
  std::size_t m_;
  double gamma_;
  std::vector<std::vector<std::size_t>> allowed_;
  std::vector<std::vector<Transition>> rows_;
  std::vector<double> cost_;
};

namespace detail {

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
  std::string text;
  for (int precision = 1; precision <= 17; ++precision) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(precision);
    os << x;
    text = os.str();
    std::istringstream is(text);
    is.imbue(std::locale::classic());
    double back = 0.0;
    if ((is >> back) && back == x) break;
  }
  return text;
}

inline std::string pair_label(std::size_t s, std::size_t a) {
  return "(" + std::to_string(s) + "," + std::to_string(a) + ")";
}

}  // namespace detail

/// Lists every violated model invariant; empty means the instance is valid.
inline std::vector<std::string> validate(const Mdp& mdp) {
  std::vector<std::string> out;
  if (mdp.num_states() == 0) out.push_back("n must be positive");
  if (mdp.num_actions() == 0) out.push_back("m must be positive");
  if (!(mdp.gamma() > 0.0 && mdp.gamma() < 1.0))
    out.push_back("gamma not in (0,1): " + detail::format_double(mdp.gamma()));

  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (mdp.actions(s).empty()) {
      out.push_back("state " + std::to_string(s) + " has no admissible action");
      continue;
    }
    for (std::size_t r = mdp.first_row(s); r < mdp.first_row(s + 1); ++r) {
      const std::string label = detail::pair_label(s, mdp.row_action(r));
      if (!std::isfinite(mdp.row_cost(r))) out.push_back("cost " + label + " is not finite");
      double sum = 0.0;
      bool entries_ok = true;
      auto row = mdp.row(r);
      for (std::size_t i = 0; i < row.size(); ++i) {
        const auto& t = row[i];
        if (!(t.prob >= 0.0 && t.prob <= 1.0)) {
          out.push_back("row " + label + " entry " + std::to_string(t.next) +
                        " has probability outside [0,1]: " + detail::format_double(t.prob));
          entries_ok = false;
        }
        if (i > 0 && row[i - 1].next == t.next) {
          out.push_back("row " + label + " lists successor " + std::to_string(t.next) + " twice");
          entries_ok = false;
        }
        sum += t.prob;
      }
      if (entries_ok && !(std::abs(sum - 1.0) <= kStochasticTolerance))
        out.push_back("row " + label + " sums to " + detail::format_double(sum));
    }
  }
  return out;
}

inline Mdp MdpBuilder::build_validated() const {
  Mdp out = build();
  if (auto v = validate(out); !v.empty()) throw ValidationError(std::move(v));
  return out;
}

/// Throws std::invalid_argument unless pi picks an admissible action in every state.
inline void check_policy(const Mdp& mdp, const Policy& pi) {
  if (pi.size() != mdp.num_states())
    throw std::invalid_argument("policy has " + std::to_string(pi.size()) + " entries, expected " +
                                std::to_string(mdp.num_states()));
  for (std::size_t s = 0; s < pi.size(); ++s)
    if (!mdp.admissible(s, pi[s]))
      throw std::invalid_argument("policy selects non-admissible action " + std::to_string(pi[s]) +
                                  " in state " + std::to_string(s));
}

/// Transition matrix and stage costs of the Markov chain induced by a policy.
struct InducedDynamics {
  Matrix p_pi;
  Vector g_pi;
};

inline InducedDynamics induced_dynamics(const Mdp& mdp, const Policy& pi) {
  check_policy(mdp, pi);
  const std::size_t n = mdp.num_states();
  InducedDynamics out{Matrix(n, n), Vector(n)};
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t r = *mdp.row_index(s, pi[s]);
    for (const auto& t : mdp.row(r)) out.p_pi(s, t.next) += t.prob;
    out.g_pi[s] = mdp.row_cost(r);
  }
  return out;
}

/**
 * Random dense instance with every action admissible.
 *
 * Draw order, from a single Rng seeded with `seed`: for s = 0..n-1, for
 * a = 0..m-1, draw n values for the transition row (then divide by their
 * sum) followed by one stage cost. All draws are uniform on [0, 1).
 */
inline Mdp random_mdp(std::size_t n, std::size_t m, double gamma, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("random_mdp: n must be positive");
  if (m == 0) throw std::invalid_argument("random_mdp: m must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("random_mdp: gamma must lie in (0,1)");

  Rng rng(seed);
  MdpBuilder b(n, m, gamma);
  std::vector<Transition> row(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m; ++a) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = {j, rng.uniform01()};
        sum += row[j].prob;
      }
      // A row of exact zeros has probability 2^-53n; fall back to uniform.
      for (auto& t : row) t.prob = sum > 0.0 ? t.prob / sum : 1.0 / static_cast<double>(n);
      b.set_row(s, a, row);
      b.set_cost(s, a, rng.uniform01());
    }
  }
  return b.build();
}

/// Number of deterministic policies, saturating at the uint64 maximum.
inline std::uint64_t policy_count(const Mdp& mdp) {
  std::uint64_t count = 1;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    const auto k = static_cast<std::uint64_t>(mdp.actions(s).size());
    if (k == 0) return 0;
    if (count > std::numeric_limits<std::uint64_t>::max() / k)
      return std::numeric_limits<std::uint64_t>::max();
    count *= k;
  }
  return count;
}

inline constexpr std::uint64_t kDefaultPolicyCap = 1'000'000;

/**
 * Input range over every deterministic policy, in lexicographic order of the
 * action vectors (the last state varies fastest).
 */
class PolicyRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Policy;
    using difference_type = std::ptrdiff_t;
    using pointer = const Policy*;
    using reference = const Policy&;

    iterator() = default;

    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }

    iterator& operator++() {
      advance();
      return *this;
    }
    void operator++(int) { advance(); }

    friend bool operator==(const iterator& a, const iterator& b) { return a.done_ == b.done_; }

   private:
    friend class PolicyRange;
    explicit iterator(const Mdp* mdp) : mdp_(mdp), slot_(mdp->num_states(), 0), done_(false) {
      current_.action.resize(mdp->num_states());
      for (std::size_t s = 0; s < slot_.size(); ++s) current_.action[s] = mdp->actions(s)[0];
    }

    void advance() {
      for (std::size_t s = slot_.size(); s-- > 0;) {
        auto acts = mdp_->actions(s);
        if (++slot_[s] < acts.size()) {
          current_.action[s] = acts[slot_[s]];
          return;
        }
        slot_[s] = 0;
        current_.action[s] = acts[0];
      }
      done_ = true;
    }

    const Mdp* mdp_ = nullptr;
    std::vector<std::size_t> slot_;
    Policy current_;
    bool done_ = true;
  };

  PolicyRange(const Mdp& mdp, std::uint64_t cap) : mdp_(&mdp), count_(policy_count(mdp)) {
    if (count_ == 0) throw std::invalid_argument("enumerate_policies: a state has no admissible action");
    if (count_ > cap)
      throw std::length_error("enumerate_policies: policy count exceeds cap of " + std::to_string(cap));
  }

  std::uint64_t size() const { return count_; }
  iterator begin() const { return iterator(mdp_); }
  iterator end() const { return iterator(); }

 private:
  const Mdp* mdp_;
  std::uint64_t count_;
};

inline PolicyRange enumerate_policies(const Mdp& mdp, std::uint64_t cap = kDefaultPolicyCap) {
  return PolicyRange(mdp, cap);
}

}  // namespace snmdp
