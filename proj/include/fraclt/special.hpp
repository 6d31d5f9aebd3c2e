#pragma once

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "core.hpp"

namespace fraclt {

inline constexpr double pi = std::numbers::pi;

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface area of the unit sphere S^{d-1}.
inline double sphere_area(int d) { return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d); }

/// Probabilists' Hermite polynomial He_n(x).
inline double hermite_he(int n, double x) {
  if (n == 0) return 1.0;
  double a = 1.0, b = x;
  for (int k = 1; k < n; ++k) {
    const double c = x * b - k * a;
    a = b;
    b = c;
  }
  return b;
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

struct MultiIndex {
  std::vector<int> alpha;
  double weight = 1.0;  // m! / alpha!
};

/// All multi-indices of length d and order m with their multinomial weights.
inline std::vector<MultiIndex> multi_indices(int d, int m) {
  require(d >= 1 && m >= 0, "multi_indices: need d >= 1, m >= 0");
  std::vector<MultiIndex> out;
  std::vector<int> cur(static_cast<std::size_t>(d), 0);
  auto rec = [&](auto&& self, int axis, int left) -> void {
    if (axis == d - 1) {
      cur[static_cast<std::size_t>(axis)] = left;
      double w = factorial(m);
      for (int a : cur) w /= factorial(a);
      out.push_back({cur, w});
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[static_cast<std::size_t>(axis)] = v;
      self(self, axis + 1, left - v);
    }
  };
  rec(rec, 0, m);
  return out;
}

/// e^{-z} times the spherical average of e^{z cos(theta)} over S^{d-1}, z >= 0.
/// Equals Gamma(d/2) (2/z)^{d/2-1} I_{d/2-1}(z) e^{-z}.
inline double scaled_sphere_average_exp(int d, double z) {
  if (z < 0) z = -z;
  if (z == 0.0) return 1.0;
  if (d == 1) return 0.5 * (1.0 + std::exp(-2.0 * z));
  if (d == 3) return -std::expm1(-2.0 * z) / (2.0 * z);
  const double nu = 0.5 * d - 1.0;
  double scaled_i;
  if (z < 600.0) {
    scaled_i = boost::math::cyl_bessel_i(nu, z) * std::exp(-z);
  } else {
    // Large-argument expansion of I_nu(z) e^{-z}.
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 30; ++k) {
      term *= -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * z);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    scaled_i = sum / std::sqrt(2.0 * pi * z);
  }
  return std::tgamma(0.5 * d) * std::pow(2.0 / z, nu) * scaled_i;
}

/// Weber-Schafheitlin integral  int_0^inf t^{-lambda} J_nu(t)^2 dt, 0 < lambda < 2 nu + 1.
inline double bessel_square_moment(double nu, double lambda) {
  if (!(lambda > 0.0 && lambda < 2.0 * nu + 1.0))
    throw DivergenceError("bessel_square_moment: need 0 < lambda < 2 nu + 1");
  using std::lgamma;
  const double lg = lgamma(lambda) + lgamma(nu - 0.5 * lambda + 0.5) - lambda * std::log(2.0) -
                    2.0 * lgamma(0.5 * lambda + 0.5) - lgamma(0.5 * lambda + nu + 0.5);
  return std::exp(lg);
}

}  // namespace fraclt
