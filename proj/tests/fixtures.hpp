#pragma once

// Hand-built instances shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <vector>

#include "snmdp/mdp.hpp"

namespace snmdp::testing {

/// One state, two actions with self-loops, g = [1, 2], gamma = 0.5. V* = 2, pi* = [0].
inline MdpBuilder m1_builder() {
  MdpBuilder b(1, 2, 0.5);
  b.set_row(0, 0, {{0, 1.0}}).set_cost(0, 0, 1.0);
  b.set_row(0, 1, {{0, 1.0}}).set_cost(0, 1, 2.0);
  return b;
}
inline Mdp m1() { return m1_builder().build_validated(); }

/**
 * Two states, two actions, gamma = 0.5.
 *
 *   (s,a)   p(.|s,a)       g
 *   (0,0)   [0.5, 0.5]     1
 *   (0,1)   [0,   1  ]     3
 *   (1,0)   [1,   0  ]     2
 *   (1,1)   [0.25,0.75]    0.5
 *
 * Hand-solved policy costs (I - 0.5 P^pi) V = g^pi:
 *   [0,0] -> [2.4, 3.2]      [0,1] -> [12/7, 8/7]
 *   [1,0] -> [16/3, 14/3]    [1,1] -> [34/9, 14/9]
 * so V* = [12/7, 8/7] with pi* = [0,1].
 */
inline Mdp m2() {
  MdpBuilder b(2, 2, 0.5);
  b.set_row(0, 0, {{0, 0.5}, {1, 0.5}}).set_cost(0, 0, 1.0);
  b.set_row(0, 1, {{1, 1.0}}).set_cost(0, 1, 3.0);
  b.set_row(1, 0, {{0, 1.0}}).set_cost(1, 0, 2.0);
  b.set_row(1, 1, {{0, 0.25}, {1, 0.75}}).set_cost(1, 1, 0.5);
  return b.build_validated();
}

inline const std::vector<double>& m2_optimal() {
  static const std::vector<double> v{12.0 / 7.0, 8.0 / 7.0};
  return v;
}

/// Three states with restricted, sparse action sets (actions 0..2).
inline Mdp restricted3() {
  MdpBuilder b(3, 3, 0.9);
  b.set_allowed(0, {0, 2}).set_allowed(1, {1}).set_allowed(2, {0, 1, 2});
  b.set_row(0, 0, {{1, 0.7}, {2, 0.3}}).set_cost(0, 0, 1.0);
  b.set_row(0, 2, {{0, 1.0}}).set_cost(0, 2, 0.2);
  b.set_row(1, 1, {{2, 1.0}}).set_cost(1, 1, 0.0);
  b.set_row(2, 0, {{0, 0.5}, {2, 0.5}}).set_cost(2, 0, 0.3);
  b.set_row(2, 1, {{1, 1.0}}).set_cost(2, 1, 0.8);
  b.set_row(2, 2, {{2, 1.0}}).set_cost(2, 2, 0.25);
  return b.build_validated();
}

/// Seeds and shapes for the tiny random oracle suite: n in {2,3,4}, m in {2,3}, gamma in {0.4,0.9}.
struct TinyCase {
  std::size_t n, m;
  double gamma;
  std::uint64_t seed;
};

inline std::vector<TinyCase> tiny_cases(std::size_t count = 100) {
  std::vector<TinyCase> out;
  const std::size_t ns[] = {2, 3, 4};
  const std::size_t ms[] = {2, 3};
  const double gammas[] = {0.4, 0.9};
  for (std::size_t i = 0; i < count; ++i)
    out.push_back({ns[i % 3], ms[(i / 3) % 2], gammas[(i / 6) % 2], 1000 + i});
  return out;
}

}  // namespace snmdp::testing
