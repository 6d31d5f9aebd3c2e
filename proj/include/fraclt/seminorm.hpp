#pragma once

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "core.hpp"
#include "density.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "special.hpp"
#include "trial.hpp"

namespace fraclt {

/// s = m + sigma with the multi-index table of order m.
struct SemiNormParams {
  double s = 0.0;
  int m = 0;
  double sigma = 0.0;
  int d = 1;
  std::vector<MultiIndex> indices;

  SemiNormParams(int dim, double order) : s(order), d(dim) {
    require(order > 0.0 && std::isfinite(order), "semi-norm order s must be > 0");
    require(dim >= 1, "dimension must be >= 1");
    m = static_cast<int>(std::floor(order));
    sigma = order - m;
    if (sigma < 1e-14) sigma = 0.0;
    if (1.0 - sigma < 1e-14) {
      ++m;
      sigma = 0.0;
    }
    indices = multi_indices(d, m);
  }
};

/// Kinetic, Hardy, Riesz and Lebesgue functionals of one trial function.
struct EnergyBreakdown {
  double kinetic = 0.0;  // <u, (-Delta)^s u>
  double hardy = 0.0;    // int |u|^2 |x|^{-2s}
  double riesz = 0.0;    // int int |u|^2 |u|^2 |x-y|^{-2s}
  double l2 = 0.0;       // int |u|^2
  double lp = 0.0;       // int |u|^{2(1+2s/d)}
};

/// c_{d,sigma} = 2^{2 sigma - 1} pi^{-d/2} Gamma((d + 2 sigma)/2) / |Gamma(-sigma)|.
inline double fractional_constant(int d, double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw InvalidParameter("fractional_constant: sigma must lie in (0, 1)");
  require(d >= 1, "dimension must be >= 1");
  return std::pow(2.0, 2.0 * sigma - 1.0) * std::pow(pi, -0.5 * d) * std::tgamma(0.5 * (d + 2.0 * sigma)) /
         std::abs(std::tgamma(-sigma));
}

/// Sharp Hardy constant 2^{2s} (Gamma((d+2s)/4) / Gamma((d-2s)/4))^2 for 0 < s < d/2.
inline double hardy_constant(int d, double s) {
  require(d >= 1, "dimension must be >= 1");
  if (!(s > 0.0)) throw InvalidParameter("hardy_constant: s must be > 0");
  if (!(2.0 * s < d)) throw InvalidParameter("hardy_constant: requires s < d/2");
  const double r = std::exp(std::lgamma(0.25 * (d + 2.0 * s)) - std::lgamma(0.25 * (d - 2.0 * s)));
  return std::pow(2.0, 2.0 * s) * r * r;
}

/// Default per-axis order for double-cube integrals; the cost grows like n^{2d}.
inline int default_pair_order(int d) { return d == 1 ? kDefaultOrder : d == 2 ? 12 : 6; }

/// ||u||^2 of the homogeneous H^s semi-norm restricted to the cube Q.
inline ErrorEstimate hs_seminorm_cube(const TrialFunction& u, const Cube& Q, double s, int order = 0) {
  if (Q.dim() != u.dim()) throw DimensionMismatch("hs_seminorm_cube: dimensions differ");
  const SemiNormParams prm(u.dim(), s);
  const int d = u.dim();
  if (order <= 0) order = prm.sigma == 0.0 ? kDefaultOrder : default_pair_order(d);
  ErrorEstimate total;
  for (const auto& mi : prm.indices) {
    const auto& alpha = mi.alpha;
    if (prm.sigma == 0.0) {
      auto f = [&](const Point& x) {
        const double v = u.derivative(alpha, x);
        return v * v;
      };
      total = total + mi.weight * integrate_cube(f, Q, order);
    } else {
      auto G = [&](const Point& x, const Point& y) {
        const double v = u.derivative(alpha, x) - u.derivative(alpha, y);
        return v * v;
      };
      SingularOptions opt;
      opt.order = order;
      total = total + mi.weight * integrate_singular_pair(G, Q, d + 2.0 * prm.sigma, opt);
    }
  }
  if (prm.sigma > 0.0) total = fractional_constant(d, prm.sigma) * total;
  return total;
}

/// <u, (-Delta)^s u> = int |k|^{2s} |u-hat(k)|^2 dk.
inline ErrorEstimate hs_fullspace_detail(const TrialFunction& u, double s) {
  require(s >= 0.0 && std::isfinite(s), "hs_fullspace: s must be >= 0");
  const int d = u.dim();
  if (u.kind() == TrialFunction::Kind::Affine)
    throw CapabilityError("hs_fullspace needs a function with an analytic Fourier transform; use hs_seminorm_cube");
  if (s == 0.0) return {u.l2_squared(), 0.0};
  if (u.kind() == TrialFunction::Kind::Bump) {
    // |S| C^2 r^{d-2s} Gamma(p+1)^2 4^p int_0^inf x^{2s-1-2p} J_{d/2+p}(x)^2 dx
    const double p = u.power(), r = u.width(), C = u.coefficient();
    const double lambda = 1.0 + 2.0 * p - 2.0 * s;
    if (!(lambda > 0.0))
      throw DivergenceError("bump power " + std::to_string(p) + " is too rough for s = " + std::to_string(s));
    const double val = sphere_area(d) * C * C * std::pow(r, d - 2.0 * s) * std::pow(std::tgamma(p + 1.0), 2) *
                       std::pow(4.0, p) * bessel_square_moment(0.5 * d + p, lambda);
    return {val, rounding_floor(val, 8)};
  }
  const double w = u.width();
  auto h = [&](double k) { return u.fourier_abs2(k); };
  AdaptiveOptions opt;
  const ErrorEstimate r = integrate_power_weighted(h, 2.0 * s + d - 1.0, 1.0 / w,
                                                   std::numeric_limits<double>::infinity(), opt);
  return sphere_area(d) * r;
}

inline double hs_fullspace(const TrialFunction& u, double s) { return hs_fullspace_detail(u, s).value; }

/// E |Z|^{-gamma} for Z ~ N(Delta, tau^2 I) in R^d, 0 < gamma < d, |Delta| = D.
inline ErrorEstimate gaussian_inverse_power_moment(int d, double D, double tau2, double gamma) {
  if (!(gamma > 0.0 && gamma < d)) throw DivergenceError("inverse power moment needs 0 < gamma < d");
  require(tau2 > 0.0, "gaussian variance must be > 0");
  const double tau = std::sqrt(tau2);
  const double pref = std::pow(2.0 * pi * tau2, -0.5 * d) * sphere_area(d);
  auto h = [&](double r) {
    const double z = r * D / tau2;
    return std::exp(-(r - D) * (r - D) / (2.0 * tau2)) * scaled_sphere_average_exp(d, z);
  };
  AdaptiveOptions opt;
  opt.abs_tol = 1e-300;
  opt.rel_tol = 1e-13;
  const double split = D > 4.0 * tau ? D - 4.0 * tau : tau;
  const ErrorEstimate r =
      integrate_power_weighted(h, d - 1.0 - gamma, split, std::numeric_limits<double>::infinity(), opt);
  return pref * r;
}

namespace detail {

// int int over [a,b] x [c,e] of |x-y|^{-gamma}, d = 1.
inline double interval_pair_riesz(double a, double b, double c, double e, double gamma) {
  auto phi = [&](double t) {
    t = std::abs(t);
    if (t == 0.0) return 0.0;
    if (gamma == 1.0) return t * std::log(t) - t;
    return std::pow(t, 2.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma));
  };
  return phi(b - c) - phi(a - c) - phi(b - e) + phi(a - e);
}

inline ErrorEstimate box_pair_riesz(const Cube& A, const Cube& B, double gamma) {
  const int d = A.dim();
  if (d == 1) {
    const double v = interval_pair_riesz(A.lower(0), A.upper(0), B.lower(0), B.upper(0), gamma);
    return {v, rounding_floor(std::abs(v), 8)};
  }
  bool same = A.side() == B.side();
  for (int a = 0; a < d && same; ++a) same = A.lower(a) == B.lower(a);
  if (same) return cube_riesz_self_energy(A, gamma);
  double gap = 0.0;
  for (int a = 0; a < d; ++a) gap = std::max(gap, std::max(B.lower(a) - A.upper(a), A.lower(a) - B.upper(a)));
  if (!(gap > 0.0))
    throw CapabilityError("Riesz energy of overlapping or touching distinct boxes is only supported in d = 1");
  Point lo(static_cast<std::size_t>(2 * d)), hi(lo.size());
  for (int a = 0; a < d; ++a) {
    lo[static_cast<std::size_t>(a)] = A.lower(a);
    hi[static_cast<std::size_t>(a)] = A.upper(a);
    lo[static_cast<std::size_t>(d + a)] = B.lower(a);
    hi[static_cast<std::size_t>(d + a)] = B.upper(a);
  }
  auto f = [&](const Point& x) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const double t = x[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(d + a)];
      s += t * t;
    }
    return std::pow(s, -0.5 * gamma);
  };
  return integrate_box(f, lo, hi, d == 2 ? 12 : 8);
}

// Cross energy of two radial bumps with disjoint supports: nested angular averages.
inline ErrorEstimate bump_pair_riesz(int d, const RadialBumpComponent& p, const RadialBumpComponent& q, double gamma,
                                     int n) {
  double D2 = 0.0;
  for (std::size_t a = 0; a < p.center.size(); ++a) D2 += (p.center[a] - q.center[a]) * (p.center[a] - q.center[a]);
  const double D = std::sqrt(D2);
  if (!(D > p.radius + q.radius))
    throw CapabilityError("Riesz energy between radial bumps requires disjoint supports");
  auto run = [&](int order) {
    const auto& gl = gauss_legendre(order);
    // angular measure on S^{d-1} reduced to the polar angle
    std::vector<double> ct, wt;
    if (d == 1) {
      ct = {1.0, -1.0};
      wt = {0.5, 0.5};
    } else {
      double norm = 0.0;
      for (int i = 0; i < order; ++i) {
        const double th = 0.5 * pi * (1.0 + gl.nodes[static_cast<std::size_t>(i)]);
        const double w = gl.weights[static_cast<std::size_t>(i)] * std::pow(std::sin(th), d - 2);
        ct.push_back(std::cos(th));
        wt.push_back(w);
        norm += w;
      }
      for (auto& w : wt) w /= norm;
    }
    // potential of the bump p at distance t from its center (t > p.radius)
    auto potential = [&](double t) {
      Accumulator acc;
      for (int i = 0; i < order; ++i) {
        const double r = 0.5 * p.radius * (1.0 + gl.nodes[static_cast<std::size_t>(i)]);
        const double wr = 0.5 * p.radius * gl.weights[static_cast<std::size_t>(i)];
        const double prof = p.weight * std::pow(std::max(0.0, 1.0 - r * r / (p.radius * p.radius)), p.power);
        double avg = 0.0;
        for (std::size_t k = 0; k < ct.size(); ++k)
          avg += wt[k] * std::pow(t * t + r * r - 2.0 * t * r * ct[k], -0.5 * gamma);
        acc += wr * prof * std::pow(r, d - 1) * avg;
      }
      return sphere_area(d) * acc.value();
    };
    Accumulator acc;
    for (int i = 0; i < order; ++i) {
      const double r = 0.5 * q.radius * (1.0 + gl.nodes[static_cast<std::size_t>(i)]);
      const double wr = 0.5 * q.radius * gl.weights[static_cast<std::size_t>(i)];
      const double prof = q.weight * std::pow(std::max(0.0, 1.0 - r * r / (q.radius * q.radius)), q.power);
      double avg = 0.0;
      for (std::size_t k = 0; k < ct.size(); ++k)
        avg += wt[k] * potential(std::sqrt(D * D + r * r - 2.0 * D * r * ct[k]));
      acc += wr * prof * std::pow(r, d - 1) * avg;
    }
    return sphere_area(d) * acc.value();
  };
  const double v0 = run(n), v1 = run(n + 4);
  return {v1, std::abs(v1 - v0)};
}

// Self-energy of w (1 - |x|^2/r^2)_+^P through its Fourier transform:
// (2 pi)^{d/2} int |rho-hat(k)|^2 (|.|^{-gamma})-hat(k) dk, both factors in closed form.
inline ErrorEstimate bump_self_riesz(int d, const RadialBumpComponent& b, double gamma) {
  const double P = b.power, r = b.radius, W = b.weight;
  const double kernel = std::pow(2.0, 0.5 * d - gamma) * std::exp(std::lgamma(0.5 * (d - gamma)) - std::lgamma(0.5 * gamma));
  const double m = bessel_square_moment(0.5 * d + P, d + 2.0 * P - gamma + 1.0);
  const double val = std::pow(2.0 * pi, 0.5 * d) * kernel * sphere_area(d) * W * W * std::pow(r, 2.0 * d - gamma) *
                     std::pow(std::tgamma(P + 1.0), 2) * std::pow(4.0, P) * m;
  return {val, rounding_floor(val, 16)};
}

}  // namespace detail

/// int int rho(x) rho(y) |x-y|^{-gamma} dx dy for 0 < gamma < d.
inline ErrorEstimate riesz_energy(const Density& rho, double gamma) {
  const int d = rho.dim();
  if (!(gamma > 0.0)) throw InvalidParameter("riesz_energy: gamma must be > 0");
  if (!(gamma < d)) throw DivergenceError("riesz_energy: diverges for gamma >= d");
  if (rho.grid_data()) throw CapabilityError("riesz_energy is not available for sampled grid densities");
  const auto& gs = rho.gaussians();
  const auto& bs = rho.indicators();
  const auto& ps = rho.bumps();
  if ((!gs.empty() && (!bs.empty() || !ps.empty())) || (!bs.empty() && !ps.empty()))
    throw CapabilityError("riesz_energy: cross terms between different component kinds are not supported");
  ErrorEstimate total;
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = i; j < gs.size(); ++j) {
      const double D = std::sqrt(detail::dist2(gs[i].center, gs[j].center));
      const double tau2 = gs[i].sigma * gs[i].sigma + gs[j].sigma * gs[j].sigma;
      const double mult = (i == j ? 1.0 : 2.0) * gs[i].weight * gs[j].weight;
      total = total + mult * gaussian_inverse_power_moment(d, D, tau2, gamma);
    }
  for (std::size_t i = 0; i < bs.size(); ++i)
    for (std::size_t j = i; j < bs.size(); ++j) {
      const double mult = (i == j ? 1.0 : 2.0) * bs[i].weight * bs[j].weight;
      total = total + mult * detail::box_pair_riesz(bs[i].cube, bs[j].cube, gamma);
    }
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i; j < ps.size(); ++j) {
      if (i == j)
        total = total + detail::bump_self_riesz(d, ps[i], gamma);
      else
        total = total + 2.0 * detail::bump_pair_riesz(d, ps[i], ps[j], gamma, 20);
    }
  return total;
}

/// Cross energy int int rho1(x) rho2(y) |x-y|^{-gamma}.
inline ErrorEstimate riesz_cross_energy(const Density& a, const Density& b, double gamma) {
  if (a.dim() != b.dim()) throw DimensionMismatch("riesz_cross_energy: dimensions differ");
  const int d = a.dim();
  if (!(gamma > 0.0 && gamma < d)) throw DivergenceError("riesz_cross_energy: need 0 < gamma < d");
  ErrorEstimate total;
  for (const auto& g : a.gaussians())
    for (const auto& h : b.gaussians())
      total = total + g.weight * h.weight *
                          gaussian_inverse_power_moment(d, std::sqrt(detail::dist2(g.center, h.center)),
                                                        g.sigma * g.sigma + h.sigma * h.sigma, gamma);
  for (const auto& p : a.bumps())
    for (const auto& q : b.bumps()) total = total + detail::bump_pair_riesz(d, p, q, gamma, 20);
  for (const auto& p : a.indicators())
    for (const auto& q : b.indicators()) total = total + p.weight * q.weight * detail::box_pair_riesz(p.cube, q.cube, gamma);
  const bool mixed = (!a.gaussians().empty() && (!b.bumps().empty() || !b.indicators().empty())) ||
                     (!a.bumps().empty() && (!b.gaussians().empty() || !b.indicators().empty())) ||
                     (!a.indicators().empty() && (!b.gaussians().empty() || !b.bumps().empty()));
  if (mixed || a.grid_data() || b.grid_data())
    throw CapabilityError("riesz_cross_energy: unsupported component combination");
  return total;
}

/// int |u(x)|^2 |x|^{-2s} dx for 2s < d.
inline ErrorEstimate hardy_functional_detail(const TrialFunction& u, double s) {
  const int d = u.dim();
  require(s > 0.0, "hardy_functional: s must be > 0");
  if (!(2.0 * s < d)) throw DivergenceError("hardy_functional: requires 2s < d");
  double D2 = 0.0;
  for (double c : u.center()) D2 += c * c;
  const double D = std::sqrt(D2);
  switch (u.kind()) {
    case TrialFunction::Kind::Gaussian: {
      const double w = u.width();
      return u.l2_squared() * gaussian_inverse_power_moment(d, D, 0.5 * w * w, 2.0 * s);
    }
    case TrialFunction::Kind::Bump: {
      const double C = u.coefficient(), r = u.width(), p = u.power();
      if (D == 0.0) {
        auto h = [&](double t) { return std::pow(std::max(0.0, 1.0 - t * t / (r * r)), 2.0 * p); };
        AdaptiveOptions opt;
        opt.abs_tol = 1e-300;
        return (sphere_area(d) * C * C) * integrate_power_weighted(h, d - 1.0 - 2.0 * s, r, r, opt);
      }
      if (D > r) {
        const double v = detail::polar_ball_integral(
            [&](const Point& x) {
              const double ux = u(x);
              double n2 = 0.0;
              for (double c : x) n2 += c * c;
              return ux * ux * std::pow(n2, -s);
            },
            d, u.center(), r);
        return {v, 1e-9 * v};
      }
      throw CapabilityError("hardy_functional: off-center bumps whose support contains the origin are not supported");
    }
    case TrialFunction::Kind::Affine:
      throw CapabilityError("hardy_functional: affine functions are not square integrable");
  }
  return {};
}

inline double hardy_functional(const TrialFunction& u, double s) { return hardy_functional_detail(u, s).value; }

/// Volume of the intersection of two radius-R balls at center distance t.
inline double ball_intersection_volume(int d, double t, double R) {
  require(t >= 0.0 && R > 0.0, "ball_intersection_volume: need t >= 0, R > 0");
  if (t >= 2.0 * R) return 0.0;
  return unit_ball_volume(d) * std::pow(R, d) *
         boost::math::ibeta(0.5 * (d + 1), 0.5, 1.0 - t * t / (4.0 * R * R));
}

/// J(t) = int_0^inf I_d(t, R) R^{-d-gamma-1} dR.
inline ErrorEstimate fdll_integral(int d, double gamma, double t) {
  if (!(gamma > 0.0 && gamma < d)) throw DivergenceError("fdll: need 0 < gamma < d");
  require(t > 0.0, "fdll: t must be > 0");
  auto g = [&](double R) { return ball_intersection_volume(d, t, R) * std::pow(R, -d - gamma - 1.0); };
  AdaptiveOptions opt;
  opt.scale = 0.5 * t;
  opt.rel_tol = 1e-13;
  opt.abs_tol = 1e-300;
  // near R = t/2 the lens volume vanishes like (2R - t)^{(d+1)/2}; R = t/2 + v^2 smooths it
  const ErrorEstimate head = integrate_interval(
      [&](double v) { return 2.0 * v * g(0.5 * t + v * v); }, 0.0, std::sqrt(0.5 * t), opt);
  opt.scale = t;
  return head + integrate_radial(g, t, std::numeric_limits<double>::infinity(), opt);
}

struct FdllConstant {
  double value = 0.0;     // c_{d,gamma}
  double residual = 0.0;  // |J(1) - 2^gamma J(2)| / J(1)
  double error = 0.0;     // propagated quadrature error
};

/// c_{d,gamma} with 1/|x-y|^gamma = c int int 1_{B_R}(x-u) 1_{B_R}(y-u) du dR / R^{d+gamma+1}.
inline FdllConstant fdll_constant_detail(int d, double gamma) {
  const ErrorEstimate j1 = fdll_integral(d, gamma, 1.0);
  const ErrorEstimate j2 = fdll_integral(d, gamma, 2.0);
  FdllConstant c;
  c.value = 1.0 / j1.value;
  c.residual = std::abs(j1.value - std::pow(2.0, gamma) * j2.value) / j1.value;
  c.error = c.value * j1.error / j1.value;
  return c;
}

inline double fdll_constant(int d, double gamma) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, double> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    const auto it = cache.find({d, gamma});
    if (it != cache.end()) return it->second;
  }
  const double c = fdll_constant_detail(d, gamma).value;
  std::lock_guard<std::mutex> lock(mu);
  cache[{d, gamma}] = c;
  return c;
}

/// c_{d,gamma} J(t); equals t^{-gamma}.
inline double fdll_reconstruct(int d, double gamma, double t) {
  return fdll_constant(d, gamma) * fdll_integral(d, gamma, t).value;
}

/// LHS - RHS of
///  |chi(x)u(x) - chi(y)u(y)|^2 + |eta(x)u(x) - eta(y)u(y)|^2 - |u(x) - u(y)|^2
///    = [(chi(x) - chi(y))^2 + (eta(x) - eta(y))^2] u(x) u(y).
inline double loss_identity_residual(const ScalarField& chi, const ScalarField& eta, const TrialFunction& u,
                                     const Point& x, const Point& y) {
  const double cx = chi(x), cy = chi(y), ex = eta(x), ey = eta(y);
  if (std::abs(cx * cx + ex * ex - 1.0) > 1e-12 || std::abs(cy * cy + ey * ey - 1.0) > 1e-12)
    throw PreconditionError("loss_identity_residual: chi^2 + eta^2 != 1");
  const double ux = u(x), uy = u(y);
  const double lhs = (cx * ux - cy * uy) * (cx * ux - cy * uy) + (ex * ux - ey * uy) * (ex * ux - ey * uy) -
                     (ux - uy) * (ux - uy);
  const double rhs = ((cx - cy) * (cx - cy) + (ex - ey) * (ex - ey)) * ux * uy;
  return lhs - rhs;
}

/// The five functionals of one normalized trial function.
inline EnergyBreakdown energy_breakdown(const TrialFunction& u, double s) {
  const int d = u.dim();
  EnergyBreakdown e;
  e.kinetic = hs_fullspace(u, s);
  e.l2 = u.l2_squared();
  e.lp = u.lp_integral(2.0 * (1.0 + 2.0 * s / d));
  if (2.0 * s < d) {
    e.hardy = hardy_functional(u, s);
    e.riesz = riesz_energy(u.density(), 2.0 * s).value;
  }
  return e;
}

}  // namespace fraclt
