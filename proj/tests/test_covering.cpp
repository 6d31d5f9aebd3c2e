#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fraclt/covering.hpp"
#include "fraclt/expression.hpp"

using namespace fraclt;

namespace {

Density uniform(int d, double value = 1.0) { return Density::indicator_mixture(d, {{value, Cube::unit(d)}}); }

void expect_family_invariants(const CoveringPartition& p, double alpha) {
  const int kd = p.branching();
  const double a = covering_constant_a(p.k, p.dim(), alpha);
  std::set<int> seen;
  for (const auto& f : p.families)
    for (int m : f.members) EXPECT_TRUE(seen.insert(m).second) << "leaf " << m << " in two families";
  EXPECT_EQ(seen.size(), p.leaves.size());
  for (const auto& fc : check_families(p, alpha, a)) {
    EXPECT_TRUE(fc.minimal_count_ok(kd)) << fc.minimal_count;
    EXPECT_TRUE(fc.minimal_mass_ok(p.lambda)) << fc.minimal_mass;
    EXPECT_TRUE(fc.larger_ok(kd)) << fc.max_larger_count;
    EXPECT_TRUE(fc.total.satisfied) << fc.total.lhs;
  }
}

}  // namespace

TEST(BuildCovering, SingleLevel) {
  // root mass just below Lambda k^d: one split, children below Lambda
  const double lambda = 0.5;
  const auto p = build_covering(uniform(2, 4.0 * lambda * (1.0 - 1e-3)), Cube::unit(2), lambda, 2);
  ASSERT_EQ(p.leaves.size(), 4u);
  for (const auto& l : p.leaves) EXPECT_NEAR(l.mass, lambda * (1.0 - 1e-3), 1e-14);
  ASSERT_EQ(p.families.size(), 1u);
  EXPECT_EQ(p.families[0].members.size(), 4u);
}

TEST(BuildCovering, TieAtLambdaSplits) {
  const auto p = build_covering(uniform(1, 1.0), Cube::unit(1), 0.5, 2);
  // children of mass exactly 0.5 split again
  EXPECT_EQ(p.leaves.size(), 4u);
}

TEST(BuildCovering, IntervalHandSimulation) {
  const auto p = build_covering(uniform(1), Cube::unit(1), 0.3, 2);
  ASSERT_EQ(p.leaves.size(), 4u);
  for (const auto& l : p.leaves) {
    EXPECT_NEAR(l.mass, 0.25, 1e-15);
    EXPECT_EQ(l.cube.depth(), 2);
  }
  // [0,1/2] and [1/2,1] each seed their own family of the two quarter intervals
  ASSERT_EQ(p.families.size(), 2u);
  for (const auto& f : p.families) EXPECT_EQ(f.members.size(), 2u);
  expect_family_invariants(p, 1.0);
}

TEST(BuildCovering, UnitSquareLeafCounts) {
  EXPECT_EQ(build_covering(uniform(2), Cube::unit(2), 0.3, 2).leaves.size(), 4u);
  EXPECT_EQ(build_covering(uniform(2), Cube::unit(2), 0.1, 2).leaves.size(), 16u);
}

TEST(BuildCovering, TwoSeparatedGaussians) {
  const auto rho = Density::gaussian_mixture(3, {{1.0, {2, 2, 2}, 0.01}, {1.0, {7, 7, 7}, 0.01}});
  const auto p = build_covering(rho, Cube::from_bounds(0, 10, 3), 0.9, 2);
  EXPECT_TRUE(leaf_masses_below(p));
  EXPECT_NEAR(leaf_volume_sum(p), 1000.0, 1e-9 * 1000.0);
  EXPECT_GE(p.families.size(), 2u);
  int deep = 0;
  for (const auto& l : p.leaves) deep = std::max(deep, l.cube.depth());
  EXPECT_GE(deep, 8);
  // refinement stays near the centers
  for (const auto& l : p.leaves)
    if (l.cube.depth() == deep) {
      const double d1 = distance(l.cube, {2, 2, 2}), d2 = distance(l.cube, {7, 7, 7});
      EXPECT_LT(std::min(d1, d2), 0.1);
    }
  expect_family_invariants(p, 2.0 / 3.0);
  const auto ex = exclusion_functional(p, 2.0 / 3.0, covering_constant_a(2, 3, 2.0 / 3.0));
  EXPECT_TRUE(ex.satisfied) << ex.lhs;
}

TEST(BuildCovering, Preconditions) {
  EXPECT_THROW(build_covering(uniform(2), Cube::unit(2), 2.0, 2), PreconditionError);
  EXPECT_THROW(build_covering(uniform(2), Cube::unit(2), 0.1, 1), InvalidParameter);
  EXPECT_THROW(build_covering(uniform(2), Cube::unit(2), -1.0, 2), InvalidParameter);
}

TEST(BuildCovering, DepthLimitReportsCube) {
  const auto rho = Density::gaussian_mixture(1, {{1.0, {0.3}, 1e-9}});
  try {
    build_covering(rho, Cube::unit(1), 0.9, 2, 5);
    FAIL() << "expected NonTerminationError";
  } catch (const NonTerminationError& e) {
    EXPECT_NE(e.cube().find("depth=5"), std::string::npos) << e.cube();
  }
}

TEST(BuildCovering, OddKCenterProperty) {
  const auto p = build_covering(uniform(2), Cube::unit(2), 0.05, 3);
  EXPECT_TRUE(center_property(p));
  const auto rho = parse_density("gauss(w=5,c=[0.5,0.5,0.5],s=0.05) + gauss(w=3,c=[0.2,0.7,0.4],s=0.1)");
  const auto q = build_covering(rho, Cube::unit(3), 0.7, 3);
  EXPECT_TRUE(center_property(q));
  EXPECT_THROW(center_property(build_covering(uniform(2), Cube::unit(2), 0.1, 2)), InvalidParameter);
}

TEST(CoveringConstants, A) {
  EXPECT_NEAR(covering_constant_a(2, 3, 2.0 / 3.0), 4.0 + std::sqrt(186.0) / 3.0, 1e-12);
  EXPECT_NEAR(covering_constant_a(2, 1, 1.0), 1.0 + std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(covering_constant_a(3, 2, 1e6), 9.0, 1e-12);
  for (int k : {2, 3, 5})
    for (int d : {1, 2, 3}) EXPECT_GE(covering_constant_a(k, d, 0.3), std::pow(k, d));
  EXPECT_THROW(covering_constant_a(2, 1, 0.0), InvalidParameter);
}

TEST(CoveringConstants, B) {
  EXPECT_NEAR(covering_constant_b(2, 1, 2.0, 0.0, 1.0).value, 0.75, 1e-15);
  EXPECT_NEAR(covering_constant_b(3, 2, 1.0, 1.0, 100.0).value, 0.455, 1e-15);
  const auto zero = covering_constant_b(2, 2, 1.0, 0.5, 2.0);
  EXPECT_NEAR(zero.value, 0.0, 1e-15);
  EXPECT_FALSE(zero.positive);
  const auto b = covering_constant_b(2, 3, 0.5, 1.0, 20.0);
  EXPECT_TRUE(b.positive);
  EXPECT_LT(b.value, 1.0);
  EXPECT_THROW(covering_constant_b(2, 1, 1.0, 0.0, 0.0), InvalidParameter);
}

TEST(ExclusionFunctional, SingleLevelUniform) {
  const double lambda = 1.0;
  const auto p = build_covering(uniform(2, 3.5), Cube::unit(2), lambda, 2);
  ASSERT_EQ(p.leaves.size(), 4u);
  const double a = covering_constant_a(2, 2, 1.0);
  const auto r = exclusion_functional(p, 1.0, a);
  // four leaves of mass 0.875 and volume 1/4
  EXPECT_NEAR(r.lhs, 4.0 * 4.0 * 0.875 * (0.875 - lambda / a), 1e-12);
  EXPECT_TRUE(r.satisfied);
}

TEST(WeakExclusion, ZeroOffsetIsTermwisePositive) {
  const auto rho = parse_density("gauss(w=10,c=[0.3,0.6],s=0.1)");
  const auto p = build_covering(rho, Cube::unit(2), 1.5, 2);
  const auto r = weak_exclusion_functional(p, 1.0, 0.0, 0.9);
  EXPECT_TRUE(r.satisfied);
  EXPECT_GT(r.lhs, 0.0);
}

TEST(WeakExclusion, WithLemmaConstant) {
  const auto rho = parse_density("gauss(w=200,c=[0.3,0.6],s=0.05) + gauss(w=100,c=[0.8,0.2],s=0.2)");
  for (double q : {1.0, 2.0}) {
    const double lambda = 10.0 * q;
    const auto p = build_covering(rho, Cube::unit(2), lambda, 2);
    const auto b = covering_constant_b(2, 2, 0.5, q, lambda);
    ASSERT_TRUE(b.positive);
    EXPECT_TRUE(weak_exclusion_functional(p, 0.5, q, b.value).satisfied);
  }
}

TEST(LocalExclusion, HandValues) {
  std::vector<CoveringLeaf> small{{Cube::unit(2), 0.7, 0.0, 0}, {Cube::unit(2), 1.0, 0.0, 1}};
  EXPECT_EQ(local_exclusion_rhs(small, 1.0, 2), 0.0);
  const Cube q(Point{0.0, 0.0, 0.0}, 0.5);
  std::vector<CoveringLeaf> one{{q, 3.0, 0.0, 0}};
  EXPECT_NEAR(local_exclusion_rhs(one, 0.5, 3), 6.0 / (2.0 * std::sqrt(3.0) * 0.5), 1e-14);
  const auto halves = subdivide(Cube::unit(1), 2);
  std::vector<CoveringLeaf> two{{halves[0], 2.0, 0.0, 0}, {halves[1], 2.0, 0.0, 1}};
  EXPECT_NEAR(local_exclusion_rhs(two, 1.0, 1), 8.0, 1e-14);
}

TEST(GroupFamilies, EveryLeafOnce) {
  const auto rho = parse_density("gauss(w=40,c=[0.1,0.2],s=0.03) + gauss(w=20,c=[0.7,0.8],s=0.2) + uniform(cube=[0,1]^2,v=3)");
  for (int k : {2, 3}) {
    const auto p = build_covering(rho, Cube::unit(2), 2.0, k);
    expect_family_invariants(p, 0.5);
  }
}
