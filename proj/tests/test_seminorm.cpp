#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fraclt/expression.hpp"
#include "fraclt/seminorm.hpp"

using namespace fraclt;

namespace {

const Point kOrigin3{0.0, 0.0, 0.0};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// E|Z|^{-gamma} for Z ~ N(0, tau^2 I_d)
double gaussian_inverse_moment(int d, double tau, double gamma) {
  return std::pow(tau, -gamma) * std::pow(2.0, -0.5 * gamma) * std::tgamma(0.5 * (d - gamma)) / std::tgamma(0.5 * d);
}

}  // namespace

TEST(FractionalConstant, HandValues) {
  EXPECT_NEAR(fractional_constant(1, 0.5), 1.0 / (2.0 * M_PI), 1e-15);
  EXPECT_NEAR(fractional_constant(3, 0.5), 1.0 / (2.0 * M_PI * M_PI), 1e-15);
  for (double s : {0.01, 0.99}) EXPECT_GT(fractional_constant(2, s), 0.0);
  EXPECT_THROW(fractional_constant(1, 1.0), InvalidParameter);
  EXPECT_THROW(fractional_constant(1, 0.0), InvalidParameter);
}

TEST(HardyConstant, HandValues) {
  EXPECT_NEAR(hardy_constant(3, 1.0), 0.25, 1e-12);
  EXPECT_NEAR(hardy_constant(2, 0.5), 2.0 * std::pow(std::tgamma(0.75) / std::tgamma(0.25), 2), 1e-14);
  EXPECT_NEAR(hardy_constant(3, 1e-8), 1.0, 1e-6);
  EXPECT_THROW(hardy_constant(2, 1.0), InvalidParameter);
  EXPECT_THROW(hardy_constant(3, 1.5), InvalidParameter);
}

TEST(HardyConstant, DecreasesFromOneToZero) {
  // 1 as s -> 0 and 0 as s -> d/2
  double prev = 1.0;
  for (int i = 1; i <= 20; ++i) {
    const double c = hardy_constant(3, 1.5 * i / 21.0);
    EXPECT_GT(c, 0.0);
    EXPECT_LT(c, prev);
    prev = c;
  }
  EXPECT_LT(hardy_constant(3, 1.5 - 1e-9), 1e-8);
}

TEST(SemiNormParams, MultinomialWeightsSumToPower) {
  for (int d : {1, 2, 3})
    for (double s : {1.0, 2.5, 3.0}) {
      const SemiNormParams p(d, s);
      double sum = 0.0;
      for (const auto& mi : p.indices) sum += mi.weight;
      EXPECT_NEAR(sum, std::pow(d, p.m), 1e-12);
    }
}

TEST(CubeSeminorm, ConstantVanishes) {
  const auto c = TrialFunction::affine({0.0, 0.0}, 2.0);
  for (double s : {0.3, 1.0, 1.5}) EXPECT_NEAR(hs_seminorm_cube(c, Cube::unit(2), s).value, 0.0, 1e-14);
}

TEST(CubeSeminorm, LinearIntegerOrder) {
  const auto u = TrialFunction::affine({1.0}, 0.0);
  EXPECT_NEAR(hs_seminorm_cube(u, Cube::unit(1), 1.0).value, 1.0, 1e-14);
}

TEST(CubeSeminorm, LinearQuarterOrder) {
  const auto u = TrialFunction::affine({1.0}, 0.0);
  const auto v = hs_seminorm_cube(u, Cube::unit(1), 0.25);
  const double expected = fractional_constant(1, 0.25) * 8.0 / 15.0;
  EXPECT_LT(rel(v.value, expected), 1e-5);
  const auto v2 = hs_seminorm_cube(u, Cube::unit(1), 0.25, 2 * kDefaultOrder);
  EXPECT_LT(std::abs(v2.value - v.value), 1e-6);
}

TEST(CubeSeminorm, DilationCovariance) {
  const auto u = TrialFunction::gaussian({0.2}, 0.4);
  const Cube q = Cube::from_bounds(-0.5, 1.0, 1);
  const double s = 0.25;
  const double base = hs_seminorm_cube(u, q, s).value;
  for (double lam : {0.5, 3.0}) {
    // scaled() carries the lam^{d/2} amplitude, hence lam^{2s} overall
    const auto v = hs_seminorm_cube(TrialFunction::scaled(u, {0.0}, lam), q.scaled(1.0 / lam), s).value;
    EXPECT_LT(rel(v, std::pow(lam, 2.0 * s) * base), 1e-8) << lam;
  }
}

TEST(CubeSeminorm, SuperadditiveUnderFullSpace) {
  const auto u = TrialFunction::gaussian({0.1}, 0.5);
  for (double s : {0.5, 1.0}) {
    double sum = 0.0;
    for (const auto& q : subdivide(Cube::from_bounds(-4.0, 4.0, 1), 4)) sum += hs_seminorm_cube(u, q, s).value;
    EXPECT_LE(sum, hs_fullspace(u, s) + 1e-8) << s;
  }
}

TEST(FullSpace, GaussianGammaOracle) {
  const std::pair<int, double> cases[] = {{1, 0.25}, {2, 0.5}, {3, 1.0}, {3, 0.5}, {2, 1.7}};
  for (auto [d, s] : cases) {
    const auto u = TrialFunction::gaussian(Point(static_cast<std::size_t>(d), 0.0), 1.0);
    const double expected = std::tgamma(s + 0.5 * d) / std::tgamma(0.5 * d);
    EXPECT_LT(rel(hs_fullspace(u, s), expected), 1e-6) << d << " " << s;
  }
}

TEST(FullSpace, SmallOrderApproachesNorm) {
  const auto u = TrialFunction::gaussian(kOrigin3, 1.3);
  EXPECT_NEAR(hs_fullspace(u, 1e-9), 1.0, 1e-7);
}

TEST(FullSpace, DilationScaling) {
  const auto u = TrialFunction::bump({0.3, 0.0}, 0.8, 3.0);
  const double base = hs_fullspace(u, 0.7);
  for (double lam : {0.5, 2.0}) {
    const auto v = TrialFunction::scaled(u, {0.0, 0.0}, lam);
    EXPECT_LT(rel(hs_fullspace(v, 0.7), std::pow(lam, 1.4) * base), 1e-8);
  }
}

TEST(FullSpace, InterpolationBetweenOrders) {
  for (const auto& u : {TrialFunction::gaussian(kOrigin3, 0.7), TrialFunction::bump(kOrigin3, 1.2, 4.0)}) {
    const double s = 1.0;
    const double hs = hs_fullspace(u, s), l2 = u.l2_squared();
    for (double th : {0.25, 0.5, 0.75})
      EXPECT_GE(std::pow(hs, th) * std::pow(l2, 1.0 - th) - hs_fullspace(u, th * s), -1e-9);
  }
}

TEST(FullSpace, AffineIsUnsupported) {
  EXPECT_THROW(hs_fullspace(TrialFunction::affine({1.0}, 0.0), 0.5), CapabilityError);
}

TEST(Riesz, UniformIntervalHalf) {
  const auto rho = Density::indicator_mixture(1, {{1.0, Cube::unit(1)}});
  EXPECT_LT(rel(riesz_energy(rho, 0.5).value, 8.0 / 3.0), 1e-8);
}

TEST(Riesz, GaussianSelfEnergy) {
  for (int d : {1, 2, 3}) {
    const double sigma = 0.6, gamma = 0.5 * d;
    const auto rho = Density::gaussian_mixture(d, {{1.0, Point(static_cast<std::size_t>(d), 0.0), sigma}});
    const double expected = gaussian_inverse_moment(d, std::sqrt(2.0) * sigma, gamma);
    EXPECT_LT(rel(riesz_energy(rho, gamma).value, expected), 1e-8) << d;
  }
}

TEST(Riesz, FarFieldCrossTerm) {
  const double L = 100.0;
  const auto a = Density::gaussian_mixture(3, {{1.0, kOrigin3, 1.0}});
  const auto b = Density::gaussian_mixture(3, {{1.0, {L, 0.0, 0.0}, 1.0}});
  const double gamma = 1.0;
  EXPECT_LT(rel(riesz_cross_energy(a, b, gamma).value, std::pow(L, -gamma)), 1e-3);
  // the self energy of the pair is twice the cross term plus both self terms
  const double self = riesz_energy(a, gamma).value;
  auto both = a;
  both += b;
  EXPECT_LT(rel(riesz_energy(both, gamma).value, 2.0 * self + 2.0 * riesz_cross_energy(a, b, gamma).value), 1e-10);
}

TEST(Riesz, Homogeneity) {
  const auto rho = parse_density("gauss(w=1,c=[0,0,0],s=0.5) + gauss(w=2,c=[2,0,0],s=0.7)");
  const double gamma = 1.3;
  const double base = riesz_energy(rho, gamma).value;
  for (double lam : {0.5, 4.0})
    EXPECT_LT(rel(riesz_energy(rho.dilated(lam), gamma).value, std::pow(lam, gamma) * base), 1e-8);
}

TEST(Riesz, Divergent) {
  const auto rho = Density::gaussian_mixture(2, {{1.0, {0.0, 0.0}, 1.0}});
  EXPECT_THROW(riesz_energy(rho, 2.0), DivergenceError);
}

TEST(HardyFunctional, GaussianOracle) {
  EXPECT_NEAR(hardy_functional(TrialFunction::gaussian(kOrigin3, 1.0), 1.0), 2.0, 1e-10);
  // int |u|^2 |x|^{-2s} = Gamma((d-2s)/2) / Gamma(d/2) for the unit Gaussian
  const auto g2 = TrialFunction::gaussian({0.0, 0.0}, 1.0);
  EXPECT_NEAR(hardy_functional(g2, 0.5), std::tgamma(0.5) / std::tgamma(1.0), 1e-10);
}

TEST(HardyFunctional, SupportOutsideUnitBall) {
  const auto u = TrialFunction::bump({3.0, 0.0, 0.0}, 1.5, 2.0);
  const double v = hardy_functional(u, 0.75);
  EXPECT_LE(v, u.l2_squared());
  EXPECT_GT(v, 0.0);
}

TEST(HardyFunctional, DecaysUnderTranslation) {
  double prev = INFINITY;
  for (double x : {0.0, 2.0, 10.0, 100.0}) {
    const double v = hardy_functional(TrialFunction::gaussian({x, 0.0, 0.0}, 1.0), 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1.1e-4);
}

TEST(HardyInequality, TrialFamilies) {
  for (auto [d, s] : {std::pair{3, 1.0}, std::pair{3, 0.5}, std::pair{2, 0.5}, std::pair{1, 0.25}}) {
    const Point o(static_cast<std::size_t>(d), 0.0);
    for (double w : {0.3, 1.0, 4.0})
      for (const auto& u : {TrialFunction::gaussian(o, w), TrialFunction::bump(o, w, 2.5)}) {
        const auto k = hs_fullspace_detail(u, s);
        const auto h = hardy_functional_detail(u, s);
        const double c = hardy_constant(d, s);
        EXPECT_GE(k.value - c * h.value, -(k.error + c * h.error + 1e-12)) << d << " " << s << " " << w;
      }
  }
}

TEST(Fdll, OneDimensionalClosedForm) {
  // J(t) = (8/3) (t/2)^{-1/2}
  EXPECT_NEAR(fdll_constant(1, 0.5), 3.0 / (8.0 * std::sqrt(2.0)), 1e-10);
}

TEST(Fdll, LensVolumeOracle) {
  // J(1) = (pi/12) int_{1/2}^inf (16 R^-2 - 12 R^-3 + R^-5) dR = pi
  EXPECT_NEAR(fdll_constant(3, 1.0), 1.0 / M_PI, 1e-10);
}

TEST(Fdll, TIndependence) {
  for (auto [d, g] : {std::pair{1, 0.5}, std::pair{2, 1.0}, std::pair{3, 1.0}, std::pair{3, 2.0}}) {
    EXPECT_LT(fdll_constant_detail(d, g).residual, 1e-6);
    for (double t : {0.5, 1.0, 2.0, 4.0}) EXPECT_LT(rel(fdll_reconstruct(d, g, t), std::pow(t, -g)), 1e-4);
  }
  EXPECT_NEAR(fdll_reconstruct(3, 1.0, 2.0), 0.5, 1e-4);
  EXPECT_NEAR(fdll_reconstruct(2, 1.0, 0.5), 2.0, 1e-4);
  EXPECT_NEAR(fdll_reconstruct(2, 1.5, 1.0), 1.0, 1e-12);
}

TEST(Fdll, BallIntersection) {
  EXPECT_NEAR(ball_intersection_volume(1, 0.5, 1.0), 1.5, 1e-15);
  EXPECT_NEAR(ball_intersection_volume(2, 0.0, 1.0), M_PI, 1e-14);
  EXPECT_EQ(ball_intersection_volume(3, 2.5, 1.0), 0.0);
  EXPECT_NEAR(ball_intersection_volume(3, 1.0, 1.0), M_PI / 12.0 * 5.0, 1e-14);
}

TEST(LossIdentity, TrivialCases) {
  const auto u = TrialFunction::gaussian({0.0, 0.0}, 1.0);
  auto one = [](const Point&) { return 1.0; };
  auto zero = [](const Point&) { return 0.0; };
  EXPECT_EQ(loss_identity_residual(one, zero, u, {0.1, 0.2}, {0.7, -0.3}), 0.0);
  auto chi = [](const Point& x) { return std::cos(x[0]); };
  auto eta = [](const Point& x) { return std::sin(x[0]); };
  EXPECT_EQ(loss_identity_residual(chi, eta, u, {0.4, 0.1}, {0.4, 0.1}), 0.0);
}

TEST(LossIdentity, RandomRaisedCosine) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const auto u = TrialFunction::gaussian({0.3, -0.2, 0.1}, 0.8);
  auto theta = [](const Point& x) { return x[0] <= -1 ? 0.0 : x[0] >= 1 ? M_PI / 2 : M_PI / 4 * (1 - std::cos(M_PI * (x[0] + 1) / 2)); };
  auto chi = [&](const Point& x) { return std::cos(theta(x)); };
  auto eta = [&](const Point& x) { return std::sin(theta(x)); };
  for (int i = 0; i < 500; ++i) {
    const Point x{U(rng), U(rng), U(rng)}, y{U(rng), U(rng), U(rng)};
    EXPECT_LT(std::abs(loss_identity_residual(chi, eta, u, x, y)), 1e-12);
  }
}

TEST(LossIdentity, RejectsBrokenPartition) {
  const auto u = TrialFunction::gaussian({0.0}, 1.0);
  auto half = [](const Point&) { return 0.5; };
  EXPECT_THROW(loss_identity_residual(half, half, u, {0.0}, {1.0}), PreconditionError);
}

TEST(EnergyBreakdown, UnitGaussian) {
  const auto e = energy_breakdown(TrialFunction::gaussian(kOrigin3, 1.0), 1.0);
  EXPECT_NEAR(e.kinetic, 1.5, 1e-10);
  EXPECT_NEAR(e.hardy, 2.0, 1e-10);
  EXPECT_NEAR(e.l2, 1.0, 1e-12);
  EXPECT_NEAR(e.lp, std::pow(M_PI, -2.5) * std::pow(0.6 * M_PI, 1.5), 1e-12);
  EXPECT_NEAR(e.riesz, gaussian_inverse_moment(3, 1.0, 2.0), 1e-10);
}
