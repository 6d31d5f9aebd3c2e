#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <utility>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "special.hpp"

namespace fraclt {

inline constexpr int kDefaultOrder = 24;

using ScalarField = std::function<double(const Point&)>;
using PairField = std::function<double(const Point&, const Point&)>;
using RealFunction = std::function<double(double)>;

/// Gauss-Legendre rule on the reference interval [-1, 1].
struct QuadratureRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule r;
  r.order = n;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  // P_n(x) and P_n'(x) by the three-term recurrence
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < n / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    r.nodes[lo] = -x;
    r.nodes[hi] = x;
    r.weights[lo] = w;
    r.weights[hi] = w;
  }
  if (n % 2 == 1) {
    // middle node at 0: P_n'(0) from the recurrence at x = 0
    double p0 = 1.0, p1 = 0.0, dp = 1.0, dp0 = 0.0;
    for (int k = 2; k <= n; ++k) {
      const double p2 = -(k - 1.0) * p0 / k;
      const double dp2 = ((2.0 * k - 1.0) * p1 - (k - 1.0) * dp0) / k;
      p0 = p1;
      p1 = p2;
      dp0 = dp;
      dp = dp2;
    }
    const auto m = static_cast<std::size_t>(n / 2);
    r.nodes[m] = 0.0;
    r.weights[m] = 2.0 / (dp * dp);
  }
  return r;
}

// Golub-Welsch for the weight t^beta on [0, 1].
inline QuadratureRule compute_gauss_jacobi01(int n, double beta) {
  const double a = 0.0, b = beta;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    J(k, k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double m = k + 1.0;
      const double t = 2.0 * m + a + b;
      const double off =
          std::sqrt(4.0 * m * (m + a) * (m + b) * (m + a + b) / (t * t * (t + 1.0) * (t - 1.0)));
      J(k, k + 1) = off;
      J(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0_01 = 1.0 / (b + 1.0);
  QuadratureRule r;
  r.order = n;
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    r.nodes.push_back(0.5 * (1.0 + es.eigenvalues()(k)));
    r.weights.push_back(mu0_01 * v0 * v0);
  }
  return r;
}

}  // namespace detail

/// Cached Gauss-Legendre rule of order n on [-1, 1].
inline const QuadratureRule& gauss_legendre(int n) {
  if (n < 1) throw InvalidParameter("quadrature order must be >= 1");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(detail::compute_gauss_legendre(n));
  return *slot;
}

/// Cached Gauss rule for int_0^1 t^beta f(t) dt, beta > -1. Nodes lie in (0, 1).
inline const QuadratureRule& gauss_jacobi01(int n, double beta) {
  if (n < 1) throw InvalidParameter("quadrature order must be >= 1");
  if (!(beta > -1.0)) throw InvalidParameter("Gauss-Jacobi weight exponent must exceed -1");
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, beta}];
  if (!slot) slot = std::make_unique<QuadratureRule>(detail::compute_gauss_jacobi01(n, beta));
  return *slot;
}

namespace detail {

inline double checked(double v, const Point& node) {
  if (!std::isfinite(v))
    throw EvaluationError("non-finite integrand value at " + format_point(node), node);
  return v;
}

inline double checked1(double v, double x) { return checked(v, Point{x}); }

// Tensor Gauss-Legendre over the box prod [lo_a, hi_a].
inline double tensor_box(const ScalarField& f, const Point& lo, const Point& hi, int n) {
  const auto& rule = gauss_legendre(n);
  const std::size_t d = lo.size();
  std::vector<double> half(d), mid(d);
  double jac = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    half[a] = 0.5 * (hi[a] - lo[a]);
    mid[a] = 0.5 * (hi[a] + lo[a]);
    jac *= half[a];
  }
  if (jac == 0.0) return 0.0;
  std::vector<int> idx(d, 0);
  Point x(d);
  Accumulator acc;
  while (true) {
    double w = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
      const auto i = static_cast<std::size_t>(idx[a]);
      x[a] = mid[a] + half[a] * rule.nodes[i];
      w *= rule.weights[i];
    }
    acc += w * checked(f(x), x);
    std::size_t a = d;
    while (a > 0) {
      --a;
      if (++idx[a] < n) break;
      idx[a] = 0;
      if (a == 0) return jac * acc.value();
    }
    if (d == 0) return jac * acc.value();
  }
}

inline double gl_panel(const RealFunction& g, double a, double b, int n) {
  const auto& rule = gauss_legendre(n);
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  Accumulator acc;
  for (int i = 0; i < n; ++i) {
    const double x = m + h * rule.nodes[static_cast<std::size_t>(i)];
    acc += rule.weights[static_cast<std::size_t>(i)] * checked1(g(x), x);
  }
  return h * acc.value();
}

}  // namespace detail

/// Tensor Gauss-Legendre integral over a cube; error from orders n and n + 4.
inline ErrorEstimate integrate_cube(const ScalarField& f, const Cube& Q, int order = kDefaultOrder) {
  Point lo(static_cast<std::size_t>(Q.dim())), hi(lo.size());
  for (int a = 0; a < Q.dim(); ++a) {
    lo[static_cast<std::size_t>(a)] = Q.lower(a);
    hi[static_cast<std::size_t>(a)] = Q.upper(a);
  }
  const double v0 = detail::tensor_box(f, lo, hi, order);
  const double v1 = detail::tensor_box(f, lo, hi, order + 4);
  return {v1, std::abs(v1 - v0)};
}

/// Same as integrate_cube over an arbitrary box.
inline ErrorEstimate integrate_box(const ScalarField& f, const Point& lo, const Point& hi,
                                   int order = kDefaultOrder) {
  if (lo.size() != hi.size()) throw DimensionMismatch("integrate_box: bound size mismatch");
  const double v0 = detail::tensor_box(f, lo, hi, order);
  const double v1 = detail::tensor_box(f, lo, hi, order + 4);
  return {v1, std::abs(v1 - v0)};
}

struct AdaptiveOptions {
  int order = kDefaultOrder;
  double abs_tol = 1e-15;
  double rel_tol = 1e-12;
  int max_panels = 2000;
  double scale = 1.0;  // width of the first shell on infinite intervals
};

/// Globally adaptive Gauss-Legendre on a finite interval.
inline ErrorEstimate integrate_interval(const RealFunction& g, double a, double b,
                                        const AdaptiveOptions& opt = {}) {
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw InvalidParameter("integrate_interval: finite bounds required");
  if (a == b) return {};
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  struct Panel {
    double a, b, value, error;
  };
  auto eval = [&](double lo, double hi) {
    const double v0 = detail::gl_panel(g, lo, hi, opt.order);
    const double v1 = detail::gl_panel(g, lo, hi, opt.order + 4);
    return Panel{lo, hi, v1, std::abs(v1 - v0)};
  };
  auto cmp = [](const Panel& x, const Panel& y) {
    return x.error != y.error ? x.error < y.error : x.a > y.a;
  };
  std::priority_queue<Panel, std::vector<Panel>, decltype(cmp)> heap(cmp);
  heap.push(eval(a, b));
  double total = heap.top().value, err = heap.top().error;
  int panels = 1;
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) && panels < opt.max_panels) {
    Panel p = heap.top();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) break;
    heap.pop();
    Panel l = eval(p.a, mid), r = eval(mid, p.b);
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
    ++panels;
  }
  std::vector<Panel> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  Accumulator v, e;
  for (const auto& p : all) {
    v += p.value;
    e += p.error;
  }
  const double value = v.value(), error = e.value();
  if (error > std::max(1e-6 * std::abs(value), 1e3 * opt.abs_tol))
    throw DivergenceError("integrate_interval: no convergence on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "], error estimate " + std::to_string(error));
  return {sign * value, error};
}

/// int_a^b g(r) dr for 0 <= a < b <= inf. Infinite ranges are split into
/// geometric shells; once shell contributions decay at a stable geometric
/// rate 2^{-gamma}, the remaining tail is mapped onto (0, 1] by R = R0 u^{-2/gamma}.
inline ErrorEstimate integrate_radial(const RealFunction& g, double a, double b,
                                      const AdaptiveOptions& opt = {}) {
  if (!(a >= 0.0)) throw InvalidParameter("integrate_radial: lower bound must be >= 0");
  if (std::isfinite(b)) return integrate_interval(g, a, b, opt);

  const double ell = opt.scale;
  require(ell > 0.0, "integrate_radial: shell scale must be positive");
  Accumulator total, err;
  std::vector<double> c;
  double lo = a, hi = a + ell;
  int growing = 0;
  for (int k = 0; k < 400; ++k) {
    const ErrorEstimate s = integrate_interval(g, lo, hi, opt);
    total += s.value;
    err += s.error;
    c.push_back(s.value);
    lo = hi;
    hi = a + ell * std::ldexp(1.0, k + 1);

    const double tot = total.value();
    const std::size_t n = c.size();
    if (n >= 3 && tot != 0.0 && std::abs(c[n - 1]) <= 1e-17 * std::abs(tot) &&
        std::abs(c[n - 2]) <= 1e-15 * std::abs(tot))
      return {tot, err.value()};
    if (n >= 64 && tot == 0.0 && c[n - 1] == 0.0) return {0.0, err.value()};

    if (n >= 2 && std::abs(c[n - 1]) >= std::abs(c[n - 2]) && c[n - 1] != 0.0)
      ++growing;
    else
      growing = 0;
    if (growing >= 24)
      throw DivergenceError("integrate_radial: shell contributions do not decay");

    if (n >= 6) {
      const double r1 = c[n - 1] / c[n - 2], r2 = c[n - 2] / c[n - 3], r3 = c[n - 3] / c[n - 4];
      const bool stable = r1 > 0 && r2 > 0 && r3 > 0 && std::abs(r1 - r2) <= 1e-3 * r1 &&
                          std::abs(r2 - r3) <= 1e-3 * r2;
      if (stable && r1 >= 0.985 && n >= 80)
        throw DivergenceError("integrate_radial: tail decays too slowly to be integrable");
      if (stable && r1 < 0.97 && r1 > 1e-6) {
        const double gamma = -std::log2(r1);
        const double p = std::min(2.0 / gamma, 60.0);
        const double R0 = lo;
        auto mapped = [&](double u) {
          if (u <= 0.0) return 0.0;
          const double R = R0 * std::pow(u, -p);
          if (!std::isfinite(R)) return 0.0;
          const double jac = p * R / u;
          const double v = g(R) * jac;
          return std::isfinite(v) ? v : 0.0;
        };
        const ErrorEstimate tail = integrate_interval(mapped, 0.0, 1.0, opt);
        total += tail.value;
        err += tail.error;
        return {total.value(), err.value()};
      }
    }
  }
  throw DivergenceError("integrate_radial: no convergence after 400 shells");
}

/// int_0^b r^beta h(r) dr with beta > -1, exact weight handling near the origin.
/// `split` is the radius of the Gauss-Jacobi panel at the origin.
inline ErrorEstimate integrate_power_weighted(const RealFunction& h, double beta, double split,
                                              double b = std::numeric_limits<double>::infinity(),
                                              const AdaptiveOptions& opt = {}) {
  require(beta > -1.0, "integrate_power_weighted: beta must exceed -1");
  require(split > 0.0, "integrate_power_weighted: split must be positive");
  const double c0 = std::min(split, b);
  auto jacobi_panel = [&](double c, int n) {
    const auto& rule = gauss_jacobi01(n, beta);
    Accumulator acc;
    for (int i = 0; i < n; ++i) {
      const double r = c * rule.nodes[static_cast<std::size_t>(i)];
      acc += rule.weights[static_cast<std::size_t>(i)] * detail::checked1(h(r), r);
    }
    return std::pow(c, beta + 1.0) * acc.value();
  };
  auto weighted = [&](double r) { return std::pow(r, beta) * h(r); };

  Accumulator value, error;
  double c = c0;
  for (int level = 0;; ++level) {
    const double v0 = jacobi_panel(c, opt.order), v1 = jacobi_panel(c, opt.order + 4);
    const double e = std::abs(v1 - v0);
    if (e <= std::max(opt.abs_tol, opt.rel_tol * std::abs(v1)) || level >= 60) {
      value += v1;
      error += e;
      break;
    }
    const ErrorEstimate outer = integrate_interval(weighted, 0.5 * c, c, opt);
    value += outer.value;
    error += outer.error;
    c *= 0.5;
  }
  if (b > c0) {
    AdaptiveOptions o = opt;
    o.scale = c0;
    const ErrorEstimate tail = integrate_radial(weighted, c0, b, o);
    value += tail.value;
    error += tail.error;
  }
  return {value.value(), error.value()};
}

struct SingularOptions {
  int order = kDefaultOrder;
  double cap = 16.0;  // allowed growth of the desingularized integrand near the diagonal
};

namespace detail {

// int over z in [-L, L]^d of |z|^{-kappa} W(z) dz, split into orthants and
// pyramids {|z_j| = max_a |z_a|}. With vanishing = true, W(z) = O(|z|^2) and
// the radial weight absorbs two extra powers.
inline double difference_kernel(const ScalarField& W, int d, double L, double kappa, bool vanishing,
                                int n, double cap, bool probe) {
  const double beta = vanishing ? d + 1.0 - kappa : d - 1.0 - kappa;
  if (!(beta > -1.0)) throw DivergenceError("difference kernel is not integrable at the diagonal");
  const auto& rr = gauss_jacobi01(n, beta);
  const auto& tr = gauss_legendre(n);
  const int dt = d - 1;
  Accumulator total;
  Point z(static_cast<std::size_t>(d));
  std::vector<double> t(static_cast<std::size_t>(std::max(dt, 0)));

  auto f = [&](int j, unsigned signs, double r, const std::vector<double>& tt) {
    double rho2 = 1.0;
    int q = 0;
    for (int a = 0; a < d; ++a) {
      const double sgn = (signs >> a) & 1U ? -1.0 : 1.0;
      double za = r;
      if (a != j) {
        za = r * tt[static_cast<std::size_t>(q)];
        rho2 += tt[static_cast<std::size_t>(q)] * tt[static_cast<std::size_t>(q)];
        ++q;
      }
      z[static_cast<std::size_t>(a)] = sgn * za;
    }
    const double w = W(z);
    double v = std::pow(rho2, -0.5 * kappa) * w;
    if (vanishing) v /= r * r;
    return checked(v, z);
  };

  for (unsigned signs = 0; signs < (1U << d); ++signs) {
    for (int j = 0; j < d; ++j) {
      if (probe && vanishing) {
        std::vector<double> mid(static_cast<std::size_t>(std::max(dt, 0)), 0.5);
        const double r1 = L * rr.nodes.front();
        const double near = std::abs(f(j, signs, r1 / 64.0, mid));
        const double ref = std::abs(f(j, signs, r1, mid));
        if (near > cap * ref && near > 1e-300)
          throw SingularityError(
              "integrand does not vanish quadratically on the diagonal (growth factor " +
              std::to_string(ref > 0 ? near / ref : INFINITY) + ")");
      }
      Accumulator part;
      std::vector<int> idx(static_cast<std::size_t>(std::max(dt, 0)), 0);
      while (true) {
        double wt = 1.0;
        for (int q = 0; q < dt; ++q) {
          const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(q)]);
          t[static_cast<std::size_t>(q)] = 0.5 * (1.0 + tr.nodes[i]);
          wt *= 0.5 * tr.weights[i];
        }
        Accumulator radial;
        for (int i = 0; i < n; ++i) {
          const double r = L * rr.nodes[static_cast<std::size_t>(i)];
          radial += rr.weights[static_cast<std::size_t>(i)] * f(j, signs, r, t);
        }
        part += wt * radial.value();
        int q = dt;
        bool done = dt == 0;
        while (q > 0) {
          --q;
          if (++idx[static_cast<std::size_t>(q)] < n) break;
          idx[static_cast<std::size_t>(q)] = 0;
          if (q == 0) done = true;
        }
        if (done) break;
      }
      total += part.value();
    }
  }
  return std::pow(L, beta + 1.0) * total.value();
}

}  // namespace detail

/// int_{QxQ} G(x,y) / |x-y|^{exponent} dx dy for exponent = d + 2 sigma, sigma in (0,1).
/// G must vanish quadratically on the diagonal.
inline ErrorEstimate integrate_singular_pair(const PairField& G, const Cube& Q, double exponent,
                                             const SingularOptions& opt = {}) {
  const int d = Q.dim();
  const double sigma = 0.5 * (exponent - d);
  if (!(sigma > 0.0 && sigma < 1.0))
    throw InvalidParameter("integrate_singular_pair: sigma = (p - d)/2 must lie in (0, 1)");
  const double L = Q.side();
  Point lo(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) lo[static_cast<std::size_t>(a)] = Q.lower(a);

  auto run = [&](int n, bool probe) {
    const auto& rule = gauss_legendre(n);
    Point x(static_cast<std::size_t>(d)), y(x.size());
    auto W = [&](const Point& z) {
      // inner integral over y with x = y + z inside Q
      double jac = 1.0;
      std::vector<double> ylo(static_cast<std::size_t>(d)), half(ylo.size());
      for (std::size_t a = 0; a < ylo.size(); ++a) {
        const double len = L - std::abs(z[a]);
        if (len <= 0.0) return 0.0;
        ylo[a] = lo[a] + std::max(0.0, -z[a]);
        half[a] = 0.5 * len;
        jac *= half[a];
      }
      std::vector<int> idx(static_cast<std::size_t>(d), 0);
      Accumulator acc;
      while (true) {
        double w = 1.0;
        for (std::size_t a = 0; a < ylo.size(); ++a) {
          const auto i = static_cast<std::size_t>(idx[a]);
          y[a] = ylo[a] + half[a] * (1.0 + rule.nodes[i]);
          x[a] = y[a] + z[a];
          w *= rule.weights[i];
        }
        const double g = G(x, y);
        if (!std::isfinite(g)) {
          Point node = x;
          node.insert(node.end(), y.begin(), y.end());
          throw EvaluationError("non-finite pair integrand at " + format_point(node), node);
        }
        acc += w * g;
        int a = d;
        bool done = false;
        while (a > 0) {
          --a;
          if (++idx[static_cast<std::size_t>(a)] < n) break;
          idx[static_cast<std::size_t>(a)] = 0;
          if (a == 0) done = true;
        }
        if (done) break;
      }
      return jac * acc.value();
    };
    return detail::difference_kernel(W, d, L, exponent, true, n, opt.cap, probe);
  };
  const double v0 = run(opt.order, true);
  const double v1 = run(opt.order + 4, false);
  return {v1, std::abs(v1 - v0)};
}

/// int_{QxQ} |x-y|^{-gamma} dx dy for 0 < gamma < d.
inline ErrorEstimate cube_riesz_self_energy(const Cube& Q, double gamma, int order = kDefaultOrder) {
  const int d = Q.dim();
  if (!(gamma > 0.0 && gamma < d)) throw DivergenceError("cube self-energy needs 0 < gamma < d");
  const double L = Q.side();
  auto W = [&](const Point& z) {
    double w = 1.0;
    for (double za : z) w *= std::max(0.0, L - std::abs(za));
    return w;
  };
  const double v0 = detail::difference_kernel(W, d, L, gamma, false, order, 0.0, false);
  const double v1 = detail::difference_kernel(W, d, L, gamma, false, order + 4, 0.0, false);
  return {v1, std::abs(v1 - v0)};
}

}  // namespace fraclt
