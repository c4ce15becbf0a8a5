#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "snmdp/bellman.hpp"
#include "snmdp/newton.hpp"

using namespace snmdp;
using snmdp::testing::m1;
using snmdp::testing::m1_builder;
using snmdp::testing::m2;

namespace {

CostVector random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  CostVector v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform01();
  return v;
}

}  // namespace

TEST(ApplyBellman, M1) {
  EXPECT_EQ(apply_bellman(m1(), CostVector{0.0}), CostVector{1.0});
  EXPECT_EQ(apply_bellman(m1(), CostVector{2.0}), CostVector{2.0});
}

TEST(ApplyBellman, M2AtZeroIsMinStageCost) {
  EXPECT_EQ(apply_bellman(m2(), CostVector{0.0, 0.0}), (CostVector{1.0, 0.5}));
}

TEST(ApplyBellman, LengthMismatchThrows) {
  EXPECT_THROW(apply_bellman(m2(), CostVector{0.0}), std::invalid_argument);
}

TEST(ApplyPolicyBellman, M1) {
  EXPECT_EQ(apply_policy_bellman(m1(), Policy({1}), CostVector{2.0}), CostVector{3.0});
}

TEST(ApplyPolicyBellman, M2HandComputed) {
  // g^pi + 0.5 P^pi [1,1] = [1 + 0.5, 0.5 + 0.5]
  EXPECT_EQ(apply_policy_bellman(m2(), Policy({0, 1}), CostVector{1.0, 1.0}), (CostVector{1.5, 1.0}));
}

TEST(ApplyPolicyBellman, PolicyCostIsFixedPoint) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mdp mdp = random_mdp(6, 3, 0.9, seed);
    const Policy pi = greedy_policy(mdp, CostVector(6, 0.0)).policy;
    const CostVector v = policy_evaluation(mdp, pi);
    EXPECT_LE(distance_inf(apply_policy_bellman(mdp, pi, v), v), 1e-10 * (1.0 + norm_inf(v)));
  }
}

TEST(ApplyPolicyBellman, RejectsInvalidPolicy) {
  EXPECT_THROW(apply_policy_bellman(m1(), Policy({2}), CostVector{0.0}), std::invalid_argument);
}

TEST(GreedyPolicy, M1NoTie) {
  auto g = greedy_policy(m1(), CostVector{0.0});
  EXPECT_EQ(g.policy, Policy({0}));
  EXPECT_FALSE(g.tie[0]);
}

TEST(GreedyPolicy, TieTakesLowestIndex) {
  auto b = m1_builder();
  b.set_cost(0, 1, 1.0);
  auto g = greedy_policy(b.build_validated(), CostVector{0.0});
  EXPECT_EQ(g.policy, Policy({0}));
  EXPECT_TRUE(g.tie[0]);
}

TEST(GreedyPolicy, TieToleranceIsRelative) {
  MdpBuilder b(1, 3, 0.5);
  for (std::size_t a = 0; a < 3; ++a) b.set_row(0, a, {{0, 1.0}});
  // Q-values 1000 + {2e-6, 0, 1e-7}: band is 1e-9 * 1000 = 1e-6.
  b.set_cost(0, 0, 1000.0 + 2e-6).set_cost(0, 1, 1000.0).set_cost(0, 2, 1000.0 + 1e-7);
  auto g = greedy_policy(b.build_validated(), CostVector{0.0});
  EXPECT_EQ(g.policy, Policy({1}));
  EXPECT_TRUE(g.tie[0]);
}

TEST(GreedyPolicy, RestrictedActionsOnly) {
  const Mdp mdp = snmdp::testing::restricted3();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    EXPECT_NO_THROW(check_policy(mdp, greedy_policy(mdp, random_vector(rng, 3, -5, 5)).policy));
  }
}

TEST(GreedyPolicy, PolicyBellmanMatchesBellmanProperty) {
  Rng rng(2024);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Mdp mdp = random_mdp(8, 4, 0.9, seed);
    const CostVector theta = random_vector(rng, 8, -10.0, 10.0);
    const auto g = greedy_policy(mdp, theta);
    EXPECT_LE(distance_inf(apply_policy_bellman(mdp, g.policy, theta), apply_bellman(mdp, theta)), 1e-12);
  }
}

TEST(GreedyPolicy, ResidualConsistency) {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Mdp mdp = random_mdp(5, 3, 0.4, seed);
    const CostVector theta = random_vector(rng, 5, -3.0, 3.0);
    const auto pi = greedy_policy(mdp, theta).policy;
    CostVector expected = apply_policy_bellman(mdp, pi, theta);
    for (std::size_t s = 0; s < 5; ++s) expected[s] = theta[s] - expected[s];
    EXPECT_EQ(residual(mdp, theta), expected);
  }
}

TEST(Residual, M1) {
  EXPECT_EQ(residual(m1(), CostVector{2.0}), CostVector{0.0});
  EXPECT_EQ(residual(m1(), CostVector{0.0}), CostVector{-1.0});
  EXPECT_EQ(residual(m1(), CostVector{4.0}), CostVector{1.0});
}

TEST(Residual, VanishesAtOracleOptimum) {
  EXPECT_LE(norm_inf(residual(m2(), snmdp::testing::m2_optimal())), 1e-15);
}

TEST(BDifferential, M1) {
  auto e = b_differential_element(m1(), CostVector{0.0});
  EXPECT_EQ(e.jacobian(0, 0), 0.5);
  EXPECT_EQ(e.policy, Policy({0}));
}

TEST(BDifferential, AtOptimumUsesOptimalPolicy) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Mdp mdp = random_mdp(3, 3, 0.9, 300 + seed);
    const auto oracle = snmdp::testing::oracle_optimum(mdp);
    auto e = b_differential_element(mdp, oracle.cost);
    bool found = false;
    for (const auto& p : oracle.optimal_policies) found = found || p == e.policy.action;
    EXPECT_TRUE(found) << "seed " << seed;
    EXPECT_EQ(e.jacobian, policy_jacobian(mdp, e.policy));
  }
}

TEST(BDifferential, IdentityMinusJacobianHasNormGamma) {
  Rng rng(9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mdp mdp = random_mdp(7, 3, 0.3 + 0.03 * seed, seed);
    auto j = b_differential_element(mdp, random_vector(rng, 7, -2, 2)).jacobian;
    Matrix diff = Matrix::identity(7);
    for (std::size_t r = 0; r < 7; ++r)
      for (std::size_t c = 0; c < 7; ++c) diff(r, c) -= j(r, c);
    EXPECT_NEAR(norm_inf(diff), mdp.gamma(), 1e-12);
  }
}

TEST(BDifferential, AlwaysNonsingular) {
  Rng rng(31);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mdp mdp = random_mdp(6, 2, 0.99, seed);
    const LuFactorization lu(b_differential_element(mdp, random_vector(rng, 6, -1, 1)).jacobian);
    for (std::size_t i = 0; i < 6; ++i) {
      Vector e(6, 0.0);
      e[i] = 1.0;
      Vector x = lu.solve(e);
      for (double v : x) EXPECT_TRUE(std::isfinite(v));
      // ||J^{-1}||_inf <= 1/(1-gamma)
      EXPECT_LE(norm_inf(x), 1.0 / (1.0 - mdp.gamma()) + 1e-9);
    }
  }
}

TEST(TAlpha, M1) {
  EXPECT_EQ(apply_t_alpha(m1(), 0.8, CostVector{0.0}), CostVector{1.25});
  EXPECT_EQ(apply_t_alpha(m1(), 1.0, CostVector{0.0}), CostVector{1.0});
}

TEST(TAlpha, AlphaOneIsBellmanExactly) {
  Rng rng(17);
  const Mdp mdp = random_mdp(20, 5, 0.7, 3);
  for (int i = 0; i < 20; ++i) {
    const CostVector theta = random_vector(rng, 20, -100, 100);
    EXPECT_EQ(apply_t_alpha(mdp, 1.0, theta), apply_bellman(mdp, theta));
  }
}

TEST(TAlpha, OptimumIsFixedPointForEveryAlpha) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mdp mdp = random_mdp(3, 2, 0.9, 50 + seed);
    const auto oracle = snmdp::testing::oracle_optimum(mdp);
    for (double alpha : {-2.0, 0.3, 0.8, 1.0, 1.7, 5.0})
      EXPECT_LE(distance_inf(apply_t_alpha(mdp, alpha, oracle.cost), oracle.cost), 1e-12 / std::min(1.0, std::abs(alpha)));
  }
}

TEST(TAlpha, RejectsZeroAlpha) { EXPECT_THROW(apply_t_alpha(m1(), 0.0, CostVector{0.0}), std::invalid_argument); }

// ------------------------------------------------------------------ operator properties

TEST(Properties, BellmanIsGammaContraction) {
  Rng rng(1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mdp mdp = random_mdp(10, 4, 0.9, seed);
    for (int i = 0; i < 50; ++i) {
      const CostVector a = random_vector(rng, 10, -20, 20), b = random_vector(rng, 10, -20, 20);
      EXPECT_LE(distance_inf(apply_bellman(mdp, a), apply_bellman(mdp, b)),
                mdp.gamma() * distance_inf(a, b) + 1e-12);
    }
  }
}

TEST(Properties, TAlphaContractionAboveThreshold) {
  Rng rng(2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mdp mdp = random_mdp(10, 4, 0.4, seed);
    for (double alpha : {0.71, 0.75, 0.9, 1.1, 2.0}) {
      const double beta = std::abs(alpha - 1.0) / alpha + mdp.gamma() / alpha;
      ASSERT_LT(beta, 1.0);
      for (int i = 0; i < 50; ++i) {
        const CostVector a = random_vector(rng, 10, -5, 5), b = random_vector(rng, 10, -5, 5);
        EXPECT_LE(distance_inf(apply_t_alpha(mdp, alpha, a), apply_t_alpha(mdp, alpha, b)),
                  beta * distance_inf(a, b) + 1e-12);
      }
    }
  }
}

TEST(Properties, TAlphaMonotoneForAlphaAtLeastOne) {
  Rng rng(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mdp mdp = random_mdp(8, 3, 0.9, seed);
    for (double alpha : {1.0, 1.3, 4.0}) {
      for (int i = 0; i < 50; ++i) {
        const CostVector lo = random_vector(rng, 8, -5, 5);
        CostVector hi = lo;
        for (auto& x : hi) x += 3.0 * rng.uniform01();
        const CostVector tl = apply_t_alpha(mdp, alpha, lo), th = apply_t_alpha(mdp, alpha, hi);
        for (std::size_t s = 0; s < 8; ++s) EXPECT_LE(tl[s], th[s]);
      }
    }
  }
}

TEST(Properties, TAlphaShiftInvariance) {
  Rng rng(4);
  const Mdp mdp = random_mdp(6, 3, 0.7, 8);
  for (double alpha : {0.8, 1.0, 1.5}) {
    const double factor = (alpha - 1.0 + mdp.gamma()) / alpha;
    for (int i = 0; i < 20; ++i) {
      CostVector theta = random_vector(rng, 6, -2, 2);
      const double b = 4.0 * rng.uniform01() - 2.0;
      CostVector shifted = theta;
      for (auto& x : shifted) x += b;
      double scale = 1.0;
      for (int k = 1; k <= 10; ++k) {
        theta = apply_t_alpha(mdp, alpha, theta);
        shifted = apply_t_alpha(mdp, alpha, shifted);
        scale *= factor;
        for (std::size_t s = 0; s < 6; ++s) EXPECT_NEAR(shifted[s], theta[s] + scale * b, 1e-10);
      }
    }
  }
}
