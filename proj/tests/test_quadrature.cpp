#include <gtest/gtest.h>

#include <cmath>

#include "fraclt/quadrature.hpp"

using namespace fraclt;

TEST(GaussLegendre, WeightsSumToTwo) {
  for (int n : {1, 2, 5, 24, 28, 64}) {
    const auto& r = gauss_legendre(n);
    double s = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      s += w;
    }
    EXPECT_NEAR(s, 2.0, 1e-13) << n;
    for (double x : r.nodes) {
      EXPECT_GT(x, -1.0);
      EXPECT_LT(x, 1.0);
    }
  }
}

TEST(GaussLegendre, ExactOnMonomials) {
  for (int n : {3, 7, 24}) {
    const auto& r = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      const double exact = (p % 2) ? 0.0 : 2.0 / (p + 1);
      EXPECT_NEAR(s, exact, 2e-14) << "n=" << n << " p=" << p;
    }
  }
}

TEST(GaussJacobi, MomentsOfPowerWeight) {
  for (double beta : {-0.5, 0.0, 0.5, 1.3}) {
    const auto& r = gauss_jacobi01(12, beta);
    for (int p = 0; p <= 23; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      EXPECT_NEAR(s, 1.0 / (p + beta + 1.0), 1e-13) << beta << " " << p;
    }
  }
}

TEST(IntegrateCube, Volume) {
  const auto r = integrate_cube([](const Point&) { return 1.0; }, Cube(Point{0, 0, 0}, 2.0));
  EXPECT_NEAR(r.value, 8.0, 1e-12);
  EXPECT_GE(r.error, 0.0);
}

TEST(IntegrateCube, Monomial) {
  for (int d = 1; d <= 3; ++d) {
    const auto r = integrate_cube([](const Point& x) { return x[0] * x[0]; }, Cube::unit(d), 8);
    EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-14);
  }
}

TEST(IntegrateCube, GaussianAgainstErf) {
  const double inv_sqrt_pi = 1.0 / std::sqrt(pi);
  auto f = [&](const Point& x) { return inv_sqrt_pi * std::exp(-x[0] * x[0]); };
  const auto r = integrate_cube(f, Cube::from_bounds(-8, 8, 1), 48);
  EXPECT_NEAR(r.value, std::erf(8.0), 1e-10);
  EXPECT_NEAR(r.value, 1.0, 1e-10);
}

TEST(IntegrateCube, NonFiniteSampleReportsNode) {
  auto f = [](const Point& x) { return x[0] > 0.5 ? NAN : 1.0; };
  try {
    integrate_cube(f, Cube::unit(1), 4);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    ASSERT_EQ(e.node().size(), 1u);
    EXPECT_GT(e.node()[0], 0.5);
  }
}

TEST(IntegrateCube, RefinementErrorShrinks) {
  auto f = [](const Point& x) { return std::exp(std::sin(7.0 * x[0])); };
  double prev = INFINITY;
  for (int n : {8, 16, 32}) {
    const auto r = integrate_cube(f, Cube::from_bounds(0, 3, 1), n);
    EXPECT_LT(r.error, prev);
    prev = r.error;
  }
}

TEST(IntegrateRadial, Exponential) {
  const auto r = integrate_radial([](double x) { return std::exp(-x); }, 0.0, INFINITY);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(IntegrateRadial, GammaOracle) {
  const auto r = integrate_radial([](double x) { return x * x * std::exp(-x * x); }, 0.0, INFINITY);
  EXPECT_NEAR(r.value, std::tgamma(1.5) / 2.0, 1e-12);
  EXPECT_NEAR(r.value, std::sqrt(pi) / 4.0, 1e-12);
}

TEST(IntegrateRadial, ConstantOnUnitInterval) {
  const auto r = integrate_radial([](double) { return 1.0; }, 0.0, 1.0);
  EXPECT_NEAR(r.value, 1.0, 1e-15);
}

TEST(IntegrateRadial, AlgebraicTail) {
  // int_1^inf r^{-3/2} dr = 2 ; int_0^inf dr/(1+r)^{1.25} = 4
  EXPECT_NEAR(integrate_radial([](double x) { return std::pow(x, -1.5); }, 1.0, INFINITY).value, 2.0,
              1e-9);
  EXPECT_NEAR(
      integrate_radial([](double x) { return std::pow(1.0 + x, -1.25); }, 0.0, INFINITY).value, 4.0,
      1e-8);
}

TEST(IntegrateRadial, DivergentIntegralsAreReported) {
  EXPECT_THROW(integrate_radial([](double x) { return 1.0 / x; }, 1.0, INFINITY), DivergenceError);
  EXPECT_THROW(integrate_radial([](double) { return 1.0; }, 0.0, INFINITY), DivergenceError);
}

TEST(IntegratePowerWeighted, GammaMoments) {
  // int_0^inf r^{-1/2} e^{-r} dr = sqrt(pi)
  const auto r = integrate_power_weighted([](double x) { return std::exp(-x); }, -0.5, 1.0);
  EXPECT_NEAR(r.value, std::sqrt(pi), 1e-12);
}

TEST(SingularPair, ZeroField) {
  const auto r =
      integrate_singular_pair([](const Point&, const Point&) { return 0.0; }, Cube::unit(2), 2.5, {8});
  EXPECT_EQ(r.value, 0.0);
}

TEST(SingularPair, KernelCancellation) {
  auto G = [](const Point& x, const Point& y) { return (x[0] - y[0]) * (x[0] - y[0]); };
  const auto r = integrate_singular_pair(G, Cube::unit(1), 2.0);
  EXPECT_NEAR(r.value, 1.0, 1e-13);
}

TEST(SingularPair, QuarterOrderIteratedIntegral) {
  // 2 int_0^1 int_0^x (x-y)^{1/2} dy dx = 8/15
  auto G = [](const Point& x, const Point& y) { return (x[0] - y[0]) * (x[0] - y[0]); };
  const auto r = integrate_singular_pair(G, Cube::unit(1), 1.5);
  EXPECT_NEAR(r.value, 8.0 / 15.0, 1e-13);
}

TEST(SingularPair, SymmetricInArgumentRoles) {
  auto v = [](const Point& x) { return std::sin(2.0 * x[0]) + x[1] * x[1]; };
  auto G = [&](const Point& x, const Point& y) { return std::pow(v(x) - v(y), 2) * (1.0 + x[0]); };
  auto Gs = [&](const Point& x, const Point& y) { return G(y, x); };
  const Cube Q = Cube::unit(2);
  const auto a = integrate_singular_pair(G, Q, 2.6, {10});
  const auto b = integrate_singular_pair(Gs, Q, 2.6, {10});
  EXPECT_NEAR(a.value, b.value, 1e-12 * std::abs(a.value));
}

TEST(SingularPair, RejectsNonQuadraticVanishing) {
  auto G = [](const Point& x, const Point& y) { return std::abs(x[0] - y[0]); };
  EXPECT_THROW(integrate_singular_pair(G, Cube::unit(1), 1.5), SingularityError);
  auto one = [](const Point&, const Point&) { return 1.0; };
  EXPECT_THROW(integrate_singular_pair(one, Cube::unit(1), 1.5), SingularityError);
}

TEST(SingularPair, SigmaOutOfRange) {
  auto G = [](const Point& x, const Point& y) { return (x[0] - y[0]) * (x[0] - y[0]); };
  EXPECT_THROW(integrate_singular_pair(G, Cube::unit(1), 1.0), InvalidParameter);
  EXPECT_THROW(integrate_singular_pair(G, Cube::unit(1), 3.0), InvalidParameter);
}

TEST(CubeRieszSelfEnergy, UnitIntervalHalf) {
  EXPECT_NEAR(cube_riesz_self_energy(Cube::unit(1), 0.5).value, 8.0 / 3.0, 1e-13);
}

TEST(CubeRieszSelfEnergy, AgreesWithTensorQuadratureInTwoDimensions) {
  // gamma = 1 on the unit square; reference by brute-force midpoint-free GL on
  // the four-dimensional integral split along the diagonal is too slow, so
  // compare with the known closed form of int_{[0,1]^4} |x-y|^{-1}.
  const double exact = 4.0 / 3.0 * (1.0 - std::sqrt(2.0)) + 4.0 * std::log(1.0 + std::sqrt(2.0));
  EXPECT_NEAR(cube_riesz_self_energy(Cube::unit(2), 1.0).value, exact, 1e-10);
}
