#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "fraclt/density.hpp"
#include "fraclt/expression.hpp"
#include "fraclt/trial.hpp"

using namespace fraclt;

namespace {

Density unit_gaussian(int d, double sigma = 1.0, double w = 1.0) {
  return Density::gaussian_mixture(d, {{w, Point(static_cast<std::size_t>(d), 0.0), sigma}});
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Mass, UniformHalves) {
  const auto rho = Density::indicator_mixture(1, {{1.0, Cube::unit(1)}});
  const auto kids = subdivide(Cube::unit(1), 2);
  EXPECT_NEAR(mass(rho, kids[0]), 0.5, 1e-15);
  const auto sq = Density::indicator_mixture(2, {{1.0, Cube::unit(2)}});
  for (const auto& q : subdivide(Cube::unit(2), 2)) EXPECT_NEAR(mass(sq, q), 0.25, 1e-15);
}

TEST(Mass, GaussianFillsWideCube) {
  for (int d : {1, 2, 3}) {
    const double sigma = 0.7;
    const auto rho = unit_gaussian(d, sigma);
    const Cube big(Point(static_cast<std::size_t>(d), 0.0), 24.0 * sigma);
    EXPECT_NEAR(mass(rho, big), 1.0, 1e-10) << "d=" << d;
  }
}

TEST(Mass, GaussianAgainstErf) {
  const auto rho = Density::gaussian_mixture(2, {{2.0, {0.3, -0.1}, 0.4}});
  const Cube q = Cube::from_bounds(0.0, 1.0, 2);
  const double px = normal_cdf((1.0 - 0.3) / 0.4) - normal_cdf((0.0 - 0.3) / 0.4);
  const double py = normal_cdf((1.0 + 0.1) / 0.4) - normal_cdf((0.0 + 0.1) / 0.4);
  EXPECT_NEAR(mass(rho, q), 2.0 * px * py, 1e-14);
}

TEST(Mass, ZeroDensity) { EXPECT_EQ(mass(Density(3), Cube::unit(3)), 0.0); }

TEST(Mass, AdditiveOverChildren) {
  const auto rho = parse_density("gauss(w=1,c=[0.2,0.7],s=0.15) + 0.5*bump(c=[0.6,0.4],r=0.3,p=3) + "
                                 "uniform(c=[0.5,0.5],side=0.4,v=2)");
  for (int k : {2, 3}) {
    const Cube root = Cube::unit(2);
    double sum = 0.0;
    for (const auto& q : subdivide(root, k)) sum += mass(rho, q);
    EXPECT_NEAR(sum, mass(rho, root), 1e-9 * mass(rho, root)) << "k=" << k;
  }
}

TEST(Mass, BumpTotalMatchesBeta) {
  const RadialBumpComponent b{1.5, {0.0, 0.0, 0.0}, 0.8, 2.0};
  const auto rho = Density::radial_bump_mixture(3, {b});
  // int (1 - r^2)^2 over the unit ball is 4 pi (1/3 - 2/5 + 1/7) = 32 pi / 105
  const double expected = 1.5 * std::pow(0.8, 3) * 32.0 * M_PI / 105.0;
  EXPECT_NEAR(mass(rho, Cube(Point{0.0, 0.0, 0.0}, 2.0)), expected, 1e-10 * expected);
}

TEST(Mass, ScaledDensityIsMonotone) {
  const auto rho = unit_gaussian(2, 0.3);
  const auto big = rho.scaled(2.5);
  const Cube q = Cube::from_bounds(-0.2, 0.5, 2);
  EXPECT_NEAR(mass(big, q), 2.5 * mass(rho, q), 1e-14);
  EXPECT_LE(ball_mass(rho, {0.1, 0.1}, 0.4), ball_mass(big, {0.1, 0.1}, 0.4));
  EXPECT_LE(maximal_function(rho, {0.1, 0.1}), maximal_function(big, {0.1, 0.1}));
}

TEST(BallMass, UniformDiskArea) {
  const auto rho = Density::indicator_mixture(2, {{1.0, Cube(Point{0.0, 0.0}, 10.0)}});
  EXPECT_NEAR(ball_mass(rho, {0.0, 0.0}, 1.0), M_PI, 1e-10);
}

TEST(BallMass, IntervalHalf) {
  const auto rho = Density::indicator_mixture(1, {{1.0, Cube::unit(1)}});
  EXPECT_NEAR(ball_mass(rho, {0.0}, 0.5), 0.5, 1e-14);
}

TEST(BallMass, GaussianAgainstIncompleteGamma) {
  for (int d : {1, 2, 3}) {
    const double sigma = 0.6;
    const auto rho = unit_gaussian(d, sigma, 3.0);
    const Point c(static_cast<std::size_t>(d), 0.0);
    for (double R : {0.1, 0.7, 2.0}) {
      const double expected = 3.0 * boost::math::gamma_p(0.5 * d, 0.5 * R * R / (sigma * sigma));
      EXPECT_NEAR(ball_mass(rho, c, R), expected, 1e-10) << "d=" << d << " R=" << R;
    }
    EXPECT_NEAR(ball_mass(rho, c, 50.0), 3.0, 1e-10);
  }
}

TEST(BallMass, OffCenterGaussianAgainstQuadrature) {
  const auto rho = Density::gaussian_mixture(2, {{1.0, {0.4, 0.0}, 0.5}});
  // polar integral by brute force
  const int n = 2000;
  double sum = 0.0;
  const double R = 0.9;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = R * (i + 0.5) / n, t = 2.0 * M_PI * (j + 0.5) / n;
      const double x = r * std::cos(t) - 0.4, y = r * std::sin(t);
      sum += std::exp(-(x * x + y * y) / 0.5) / (M_PI * 0.5) * r;
    }
  sum *= (R / n) * (2.0 * M_PI / n);
  EXPECT_NEAR(ball_mass(rho, {0.0, 0.0}, R), sum, 1e-6);
}

TEST(BallMass, RejectsNonPositiveRadius) {
  EXPECT_THROW(ball_mass(unit_gaussian(2), {0.0, 0.0}, 0.0), InvalidParameter);
  EXPECT_THROW(ball_mass(unit_gaussian(2), {0.0, 0.0, 0.0}, 1.0), DimensionMismatch);
}

TEST(Maximal, ConstantDensity) {
  const auto rho = Density::indicator_mixture(2, {{1.0, Cube(Point{0.0, 0.0}, 1e4)}});
  EXPECT_NEAR(maximal_function(rho, {0.3, -0.2}, {1e-3, 10.0, 64}), 1.0, 1e-10);
}

TEST(Maximal, IntervalIndicator) {
  const auto rho = Density::indicator_mixture(1, {{1.0, Cube(Point{0.0}, 2.0)}});
  EXPECT_NEAR(maximal_function(rho, {0.0}), 1.0, 1e-12);
}

TEST(Maximal, GaussianPeakFromRadialOracle) {
  // rho = pi^{-3/2} e^{-r^2}; ball average = gamma_p(3/2, R^2) / (4/3 pi R^3)
  const auto rho = unit_gaussian(3, std::sqrt(0.5));
  double best = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double R = 1e-4 * std::pow(1e7, i / 4000.0);
    best = std::max(best, boost::math::gamma_p(1.5, R * R) / (4.0 / 3.0 * M_PI * R * R * R));
  }
  const double v = maximal_function(rho, {0.0, 0.0, 0.0});
  EXPECT_NEAR(v, best, 1e-6 * best);
  EXPECT_NEAR(v, std::pow(M_PI, -1.5), 1e-6 * std::pow(M_PI, -1.5));
}

TEST(Maximal, DominatesEveryGridAverage) {
  const auto rho = parse_density("gauss(w=1,c=[0.5,0],s=0.2) + gauss(w=2,c=[-1,0.3],s=0.5)");
  const Point u{0.1, 0.2};
  const RadiusGrid g{1e-3, 1e2, 64};
  const auto m = maximal_function_detail(rho, u, g);
  const double ratio = std::pow(g.r_max / g.r_min, 1.0 / (g.points - 1));
  for (int i = 0; i < g.points; ++i) {
    const double R = g.r_min * std::pow(ratio, i);
    EXPECT_GE(m.value, ball_mass(rho, u, R) / (M_PI * R * R));
  }
}

TEST(Maximal, GridValidation) {
  EXPECT_THROW(maximal_function(unit_gaussian(1), {0.0}, {1e-3, 1.0, 10}), InvalidParameter);
  EXPECT_THROW(maximal_function(unit_gaussian(1), {0.0}, {1.0, 1.0, 64}), InvalidParameter);
}

TEST(GridDensity, MultilinearAndClamped) {
  GridData g{Cube::unit(1), {3}, {0.0, 2.0, 0.0}};
  const auto rho = Density::grid(g);
  EXPECT_NEAR(rho({0.25}), 1.0, 1e-15);
  EXPECT_EQ(rho({1.5}), 0.0);
  EXPECT_NEAR(mass(rho, Cube::unit(1)), 1.0, 1e-12);
}

TEST(TrialFunction, NormsAndDensity) {
  const auto g = TrialFunction::gaussian({0.0, 0.0, 0.0}, 1.3, 2.0);
  EXPECT_NEAR(g.l2_squared(), 4.0, 1e-12);
  EXPECT_NEAR(mass(g.density(), Cube(Point{0.0, 0.0, 0.0}, 30.0)), 4.0, 1e-10);
  const auto b = TrialFunction::bump({0.1, 0.2}, 0.7, 3.0);
  EXPECT_NEAR(b.l2_squared(), 1.0, 1e-10);
  EXPECT_NEAR(mass(b.density(), Cube(Point{0.1, 0.2}, 1.4)), 1.0, 1e-10);
}

TEST(TrialFunction, LpIntegralOfGaussian) {
  // normalized Gaussian e^{-r^2/2} pi^{-d/4}: int |u|^q = pi^{-dq/4} (2 pi / q)^{d/2}
  const auto g = TrialFunction::gaussian({0.0, 0.0, 0.0}, 1.0);
  for (double q : {2.0, 10.0 / 3.0, 4.0})
    EXPECT_NEAR(g.lp_integral(q), std::pow(M_PI, -0.75 * q) * std::pow(2.0 * M_PI / q, 1.5), 1e-12);
}

TEST(TrialFunction, AffineHasNoPowerDensity) {
  const auto a = TrialFunction::affine({1.0}, 0.0);
  EXPECT_NEAR(a({0.3}), 0.3, 1e-15);
  EXPECT_THROW(a.power_density(2.0), CapabilityError);
  EXPECT_THROW(a.normalized(), CapabilityError);
}
