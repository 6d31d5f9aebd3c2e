#include <gtest/gtest.h>

#include <random>

#include "fraclt/geometry.hpp"

using namespace fraclt;

TEST(Subdivide, BisectsUnitInterval) {
  const auto kids = subdivide(Cube::unit(1), 2);
  ASSERT_EQ(kids.size(), 2u);
  EXPECT_DOUBLE_EQ(kids[0].lower(0), 0.0);
  EXPECT_DOUBLE_EQ(kids[0].upper(0), 0.5);
  EXPECT_DOUBLE_EQ(kids[1].lower(0), 0.5);
  EXPECT_DOUBLE_EQ(kids[1].upper(0), 1.0);
  EXPECT_EQ(kids[1].depth(), 1);
}

TEST(Subdivide, OddSplitKeepsMiddleCenter) {
  const Cube sq = Cube::unit(2);
  const auto kids = subdivide(sq, 3);
  ASSERT_EQ(kids.size(), 9u);
  for (const auto& c : kids) EXPECT_DOUBLE_EQ(c.side(), 1.0 / 3.0);
  EXPECT_EQ(kids[4].center(), sq.center());
  EXPECT_TRUE(shares_root_center(kids[4]));
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (i == 4) continue;
    EXPECT_FALSE(shares_root_center(kids[i]));
    EXPECT_TRUE(far_from_root_center(kids[i], sq.center()));
    EXPECT_GE(distance(kids[i], sq.center()), 0.5 * kids[i].side() - 1e-15);
  }
}

TEST(Subdivide, LexicographicOrder) {
  const auto kids = subdivide(Cube::unit(2), 2);
  EXPECT_EQ(kids[0].lattice_index(), (std::vector<std::int64_t>{0, 0}));
  EXPECT_EQ(kids[1].lattice_index(), (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(kids[2].lattice_index(), (std::vector<std::int64_t>{1, 0}));
  EXPECT_LT(kids[0].center()[1], kids[1].center()[1]);
}

TEST(Subdivide, VolumeConserved) {
  const Cube c(Point{0.3, -1.0, 2.0}, 1.0);
  for (int k : {2, 3, 5}) {
    const auto kids = subdivide(c, k);
    ASSERT_EQ(kids.size(), static_cast<std::size_t>(k * k * k));
    double v = 0.0;
    for (const auto& q : kids) v += q.volume();
    EXPECT_NEAR(v, c.volume(), 1e-12 * c.volume());
  }
}

TEST(Subdivide, RejectsSmallK) {
  EXPECT_THROW(subdivide(Cube::unit(2), 1), InvalidParameter);
  EXPECT_THROW(Cube(Point{0.0}, -1.0), InvalidParameter);
}

TEST(Contains, BasicQueries) {
  EXPECT_TRUE(contains(Cube::unit(2), Point{0.2, 0.7}));
  EXPECT_FALSE(contains(Cube::unit(1), Point{1.5}));
  EXPECT_TRUE(contains(Cube::unit(1), Point{1.0}));
  EXPECT_THROW(contains(Cube::unit(2), Point{0.5}), DimensionMismatch);
}

TEST(Contains, SharedFaceGoesToUpperChild) {
  const auto kids = subdivide(Cube::unit(1), 2);
  EXPECT_FALSE(contains(kids[0], Point{0.5}));
  EXPECT_TRUE(contains(kids[1], Point{0.5}));
  EXPECT_TRUE(contains(kids[1], Point{1.0}));
}

TEST(Contains, EveryPointInExactlyOneDescendant) {
  std::mt19937_64 rng(11);
  const Cube root = Cube::unit(2);
  std::vector<Cube> leaves;
  for (const auto& c : subdivide(root, 2))
    for (const auto& g : subdivide(c, 3)) leaves.push_back(g);
  // lattice points, including shared faces and the outer boundary
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j <= 6; ++j) {
      const Point x{i / 6.0, j / 6.0};
      int hits = 0;
      for (const auto& q : leaves) hits += contains(q, x);
      EXPECT_EQ(hits, 1) << format_point(x);
    }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 400; ++trial) {
    const Point x{u(rng), u(rng)};
    int hits = 0;
    for (const auto& q : leaves) hits += contains(q, x);
    EXPECT_EQ(hits, 1) << format_point(x);
  }
}

TEST(Geometry, DeepOddLatticeCenterTest) {
  Cube c = Cube::unit(3);
  for (int level = 0; level < 12; ++level) c = subdivide(c, 3)[13];
  EXPECT_TRUE(shares_root_center(c));
  const Point mid(3, 0.5);
  EXPECT_FALSE(far_from_root_center(c, mid));
  const auto kids = subdivide(c, 3);
  for (std::size_t i = 0; i < kids.size(); ++i)
    EXPECT_EQ(far_from_root_center(kids[i], mid), i != 13);
}
