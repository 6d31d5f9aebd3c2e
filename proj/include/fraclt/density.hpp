#pragma once

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace fraclt {

/// w * N(center, sigma^2 I): a normalized Gaussian of total mass w.
struct GaussianComponent {
  double weight = 1.0;
  Point center;
  double sigma = 1.0;
};

/// Constant value `weight` on `cube`, zero elsewhere.
struct IndicatorComponent {
  double weight = 1.0;
  Cube cube;
};

/// weight * (1 - |x - c|^2 / r^2)_+^power.
struct RadialBumpComponent {
  double weight = 1.0;
  Point center;
  double radius = 1.0;
  double power = 1.0;

  double mass(int d) const {
    return weight * std::pow(radius, d) * 0.5 * sphere_area(d) * boost::math::beta(0.5 * d, power + 1.0);
  }
};

/// Uniform samples on a box, multilinear in between, zero outside.
struct GridData {
  Cube box;
  std::vector<int> shape;       // samples per axis, >= 2
  std::vector<double> samples;  // row-major, axis 0 slowest
};

namespace detail {

// P(lo <= Z <= hi) for Z ~ N(0, 1), accurate in both tails.
inline double normal_interval(double lo, double hi) {
  if (hi <= lo) return 0.0;
  const double s = 1.0 / std::sqrt(2.0);
  if (lo >= 0.0) return 0.5 * (std::erfc(lo * s) - std::erfc(hi * s));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi * s) - std::erfc(-lo * s));
  return 0.5 * (std::erf(hi * s) - std::erf(lo * s));
}

inline double sq(double x) { return x * x; }

inline double dist2(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += sq(a[i] - b[i]);
  return s;
}

// Antiderivative of sqrt(R^2 - x^2).
inline double circle_primitive(double x, double R) {
  x = std::clamp(x, -R, R);
  const double r = std::sqrt(std::max(0.0, R * R - x * x));
  return 0.5 * (x * r + R * R * std::asin(x / R));
}

// Length of [-h, h] + c intersected with [lo, hi].
inline double clip_length(double c, double h, double lo, double hi) {
  return std::max(0.0, std::min(hi, c + h) - std::max(lo, c - h));
}

// Area of the disk of radius R centered at u intersected with [lo, hi] (2-D), exact.
inline double disk_box_area(double R, const double* u, const double* lo, const double* hi) {
  if (R <= 0.0) return 0.0;
  // integrate the slice length over x in [lo0, hi0] cap [u0 - R, u0 + R] piecewise
  const double a = std::max(lo[0], u[0] - R), b = std::min(hi[0], u[0] + R);
  if (b <= a) return 0.0;
  const double top = hi[1] - u[1], bot = u[1] - lo[1];  // signed distances to the y faces
  std::vector<double> cuts{a, b};
  for (double e : {top, bot})
    if (std::abs(e) < R) {
      const double w = std::sqrt(R * R - e * e);
      for (double x : {u[0] - w, u[0] + w})
        if (x > a && x < b) cuts.push_back(x);
    }
  std::sort(cuts.begin(), cuts.end());
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double x0 = cuts[i], x1 = cuts[i + 1];
    if (x1 <= x0) continue;
    const double xm = 0.5 * (x0 + x1);
    const double hm = std::sqrt(std::max(0.0, R * R - sq(xm - u[0])));
    // on this piece each end of the slice is either a box face or the circle
    const bool top_circle = u[1] + hm < hi[1];
    const bool bot_circle = u[1] - hm > lo[1];
    if (std::min(hi[1], u[1] + hm) <= std::max(lo[1], u[1] - hm)) continue;
    const double circ = circle_primitive(x1 - u[0], R) - circle_primitive(x0 - u[0], R);
    double upper = top_circle ? u[1] * (x1 - x0) + circ : hi[1] * (x1 - x0);
    double lower = bot_circle ? u[1] * (x1 - x0) - circ : lo[1] * (x1 - x0);
    area += upper - lower;
  }
  return area;
}

// Volume of B(u, R) intersected with the box [lo, hi] in dimension d.
inline double ball_box_volume(int d, double R, const double* u, const double* lo, const double* hi) {
  if (R <= 0.0) return 0.0;
  if (d == 1) return clip_length(u[0], R, lo[0], hi[0]);
  bool inside = true;
  for (int k = 0; k < d; ++k) inside = inside && lo[k] <= u[k] - R && hi[k] >= u[k] + R;
  if (inside) return unit_ball_volume(d) * std::pow(R, d);
  if (d == 2) return disk_box_area(R, u, lo, hi);
  const double a = std::max(lo[0], u[0] - R), b = std::min(hi[0], u[0] + R);
  if (b <= a) return 0.0;
  // breakpoints where the slice radius meets a face or an edge of the remaining box
  std::vector<double> e;
  for (int k = 1; k < d; ++k) e.push_back(std::abs(lo[k] - u[k])), e.push_back(std::abs(hi[k] - u[k]));
  std::vector<double> radii;
  const int m = d - 1;
  for (std::uint32_t mask = 1; mask < (1U << (2 * m)); ++mask) {
    double s = 0.0;
    bool ok = true;
    for (int k = 0; k < m && ok; ++k) {
      const bool l = (mask >> (2 * k)) & 1U, h = (mask >> (2 * k + 1)) & 1U;
      if (l && h) ok = false;
      if (l) s += sq(e[static_cast<std::size_t>(2 * k)]);
      if (h) s += sq(e[static_cast<std::size_t>(2 * k + 1)]);
    }
    if (ok) radii.push_back(std::sqrt(s));
  }
  std::vector<double> cuts{a, b};
  for (double rho : radii)
    if (rho < R) {
      const double w = std::sqrt(R * R - rho * rho);
      for (double x : {u[0] - w, u[0] + w})
        if (x > a && x < b) cuts.push_back(x);
    }
  std::sort(cuts.begin(), cuts.end());
  auto slice = [&](double x) {
    const double r = std::sqrt(std::max(0.0, R * R - sq(x - u[0])));
    return ball_box_volume(d - 1, r, u + 1, lo + 1, hi + 1);
  };
  AdaptiveOptions opt;
  opt.order = 16;
  opt.rel_tol = 1e-13;
  opt.abs_tol = 1e-300;
  double vol = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) {
      // substitute x = u0 + R cos(theta) near the poles to remove the square-root endpoint behaviour
      const double t0 = std::acos(std::clamp((cuts[i + 1] - u[0]) / R, -1.0, 1.0));
      const double t1 = std::acos(std::clamp((cuts[i] - u[0]) / R, -1.0, 1.0));
      vol += integrate_interval([&](double t) { return slice(u[0] + R * std::cos(t)) * R * std::sin(t); },
                                t0, t1, opt)
                 .value;
    }
  return vol;
}

}  // namespace detail

/// Nonnegative density on R^d: a sum of Gaussian, indicator and radial-bump
/// components plus at most one sampled grid.
class Density {
 public:
  enum class Kind { GaussianMixture, IndicatorMixture, RadialBumpMixture, GridSampled, Mixed, Zero };

  explicit Density(int d) : d_(d) { require(d >= 1, "density dimension must be >= 1"); }

  static Density gaussian_mixture(int d, std::vector<GaussianComponent> comps) {
    Density r(d);
    for (auto& c : comps) r.add(std::move(c));
    return r;
  }

  static Density indicator_mixture(int d, std::vector<IndicatorComponent> comps) {
    Density r(d);
    for (auto& c : comps) r.add(std::move(c));
    return r;
  }

  static Density radial_bump_mixture(int d, std::vector<RadialBumpComponent> comps) {
    Density r(d);
    for (auto& c : comps) r.add(std::move(c));
    return r;
  }

  static Density grid(GridData g) {
    Density r(g.box.dim());
    r.set_grid(std::move(g));
    return r;
  }

  void add(GaussianComponent c) {
    check_dim(c.center.size());
    require(c.weight >= 0.0 && std::isfinite(c.weight), "gaussian weight must be >= 0");
    require(c.sigma > 0.0 && std::isfinite(c.sigma), "gaussian width must be > 0");
    gauss_.push_back(std::move(c));
  }

  void add(IndicatorComponent c) {
    check_dim(static_cast<std::size_t>(c.cube.dim()));
    require(c.weight >= 0.0 && std::isfinite(c.weight), "indicator weight must be >= 0");
    boxes_.push_back(std::move(c));
  }

  void add(RadialBumpComponent c) {
    check_dim(c.center.size());
    require(c.weight >= 0.0 && std::isfinite(c.weight), "bump weight must be >= 0");
    require(c.radius > 0.0 && c.power >= 0.0, "bump radius must be > 0 and power >= 0");
    bumps_.push_back(std::move(c));
  }

  void set_grid(GridData g) {
    check_dim(static_cast<std::size_t>(g.box.dim()));
    require(static_cast<int>(g.shape.size()) == d_, "grid shape must have one entry per axis");
    std::size_t n = 1;
    for (int s : g.shape) {
      require(s >= 2, "grid needs at least 2 samples per axis");
      n *= static_cast<std::size_t>(s);
    }
    require(g.samples.size() == n, "grid sample count does not match its shape");
    for (double v : g.samples) require(v >= 0.0 && std::isfinite(v), "grid samples must be finite and >= 0");
    grid_ = std::move(g);
  }

  Density& operator+=(const Density& o) {
    check_dim(static_cast<std::size_t>(o.d_));
    for (const auto& c : o.gauss_) gauss_.push_back(c);
    for (const auto& c : o.boxes_) boxes_.push_back(c);
    for (const auto& c : o.bumps_) bumps_.push_back(c);
    if (o.grid_) {
      if (grid_) throw CapabilityError("a density holds at most one sampled grid");
      grid_ = o.grid_;
    }
    return *this;
  }

  /// c * rho for c >= 0.
  Density scaled(double c) const {
    require(c >= 0.0 && std::isfinite(c), "density scale must be >= 0");
    Density r = *this;
    for (auto& g : r.gauss_) g.weight *= c;
    for (auto& b : r.boxes_) b.weight *= c;
    for (auto& b : r.bumps_) b.weight *= c;
    if (r.grid_)
      for (auto& v : r.grid_->samples) v *= c;
    if (r.mass_hint) *r.mass_hint *= c;
    return r;
  }

  /// lambda^d rho(lambda x): same mass, lengths divided by lambda.
  Density dilated(double lambda) const {
    require(lambda > 0.0 && std::isfinite(lambda), "dilation must be > 0");
    Density r = *this;
    const double jac = std::pow(lambda, d_);
    for (auto& g : r.gauss_) {
      for (auto& x : g.center) x /= lambda;
      g.sigma /= lambda;
    }
    for (auto& b : r.boxes_) {
      b.cube = b.cube.scaled(1.0 / lambda);
      b.weight *= jac;
    }
    for (auto& b : r.bumps_) {
      for (auto& x : b.center) x /= lambda;
      b.radius /= lambda;
      b.weight *= jac;
    }
    if (r.grid_) {
      r.grid_->box = r.grid_->box.scaled(1.0 / lambda);
      for (auto& v : r.grid_->samples) v *= jac;
    }
    return r;
  }

  int dim() const { return d_; }

  Kind kind() const {
    const int kinds = !gauss_.empty() + !boxes_.empty() + !bumps_.empty() + grid_.has_value();
    if (kinds == 0) return Kind::Zero;
    if (kinds > 1) return Kind::Mixed;
    if (!gauss_.empty()) return Kind::GaussianMixture;
    if (!boxes_.empty()) return Kind::IndicatorMixture;
    if (!bumps_.empty()) return Kind::RadialBumpMixture;
    return Kind::GridSampled;
  }

  const std::vector<GaussianComponent>& gaussians() const { return gauss_; }
  const std::vector<IndicatorComponent>& indicators() const { return boxes_; }
  const std::vector<RadialBumpComponent>& bumps() const { return bumps_; }
  const std::optional<GridData>& grid_data() const { return grid_; }

  double operator()(const Point& x) const {
    check_dim(x.size());
    double v = 0.0;
    for (const auto& g : gauss_)
      v += g.weight * std::pow(2.0 * pi * g.sigma * g.sigma, -0.5 * d_) *
           std::exp(-detail::dist2(x, g.center) / (2.0 * g.sigma * g.sigma));
    for (const auto& b : boxes_)
      if (contains(b.cube, x)) v += b.weight;
    for (const auto& b : bumps_) {
      const double t = 1.0 - detail::dist2(x, b.center) / (b.radius * b.radius);
      if (t > 0.0) v += b.weight * std::pow(t, b.power);
    }
    if (grid_) v += grid_value(x);
    return v;
  }

  double total_mass() const {
    Accumulator m;
    for (const auto& g : gauss_) m += g.weight;
    for (const auto& b : boxes_) m += b.weight * b.cube.volume();
    for (const auto& b : bumps_) m += b.mass(d_);
    if (grid_) m += grid_box_mass(grid_->box.lower_corner(), grid_->box.upper_corner());
    return m.value();
  }

  /// Center of radial symmetry when every component shares one; empty otherwise.
  std::optional<Point> radial_center() const {
    if (!boxes_.empty() || grid_) return std::nullopt;
    std::optional<Point> c;
    auto same = [&](const Point& p) {
      if (!c) {
        c = p;
        return true;
      }
      return *c == p;
    };
    for (const auto& g : gauss_)
      if (!same(g.center)) return std::nullopt;
    for (const auto& b : bumps_)
      if (!same(b.center)) return std::nullopt;
    return c;
  }

  std::optional<double> mass_hint;

  // exact integral of the multilinear grid interpolant over a box
  double grid_box_mass(const Point& lo, const Point& hi) const {
    if (!grid_) return 0.0;
    const auto& g = *grid_;
    std::vector<double> h(static_cast<std::size_t>(d_));
    std::vector<int> c0(h.size()), c1(h.size());
    for (int a = 0; a < d_; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      h[ua] = g.box.side() / (g.shape[ua] - 1);
      const double l = std::max(lo[ua], g.box.lower(a)), u = std::min(hi[ua], g.box.upper(a));
      if (u <= l) return 0.0;
      c0[ua] = std::clamp(static_cast<int>(std::floor((l - g.box.lower(a)) / h[ua])), 0, g.shape[ua] - 2);
      c1[ua] = std::clamp(static_cast<int>(std::floor((u - g.box.lower(a)) / h[ua])), 0, g.shape[ua] - 2);
    }
    Accumulator acc;
    std::vector<int> cell = c0;
    while (true) {
      // per-axis integrals of the two hat pieces over the clipped cell
      std::vector<double> i0(h.size()), i1(h.size());
      bool empty = false;
      for (int a = 0; a < d_; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double x0 = g.box.lower(a) + cell[ua] * h[ua];
        const double l = std::max({lo[ua], x0, g.box.lower(a)}), u = std::min({hi[ua], x0 + h[ua], g.box.upper(a)});
        if (u <= l) {
          empty = true;
          break;
        }
        const double s0 = (l - x0) / h[ua], s1 = (u - x0) / h[ua];
        i1[ua] = h[ua] * 0.5 * (s1 * s1 - s0 * s0);
        i0[ua] = h[ua] * (s1 - s0) - i1[ua];
      }
      if (!empty) {
        for (std::uint32_t corner = 0; corner < (1U << d_); ++corner) {
          std::size_t flat = 0;
          double w = 1.0;
          for (int a = 0; a < d_; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            const int bit = (corner >> a) & 1U;
            flat = flat * static_cast<std::size_t>(g.shape[ua]) + static_cast<std::size_t>(cell[ua] + bit);
            w *= bit ? i1[ua] : i0[ua];
          }
          acc += w * g.samples[flat];
        }
      }
      int a = d_ - 1;
      for (; a >= 0; --a) {
        const auto ua = static_cast<std::size_t>(a);
        if (++cell[ua] <= c1[ua]) break;
        cell[ua] = c0[ua];
      }
      if (a < 0) break;
    }
    return acc.value();
  }

 private:
  void check_dim(std::size_t n) const {
    if (static_cast<int>(n) != d_)
      throw DimensionMismatch("dimension " + std::to_string(n) + " does not match density dimension " +
                              std::to_string(d_));
  }

  double grid_value(const Point& x) const {
    const auto& g = *grid_;
    double v = 0.0;
    std::vector<int> base(static_cast<std::size_t>(d_));
    std::vector<double> frac(base.size());
    for (int a = 0; a < d_; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      if (x[ua] < g.box.lower(a) || x[ua] > g.box.upper(a)) return 0.0;
      const double h = g.box.side() / (g.shape[ua] - 1);
      const double t = (x[ua] - g.box.lower(a)) / h;
      base[ua] = std::clamp(static_cast<int>(std::floor(t)), 0, g.shape[ua] - 2);
      frac[ua] = t - base[ua];
    }
    for (std::uint32_t corner = 0; corner < (1U << d_); ++corner) {
      std::size_t flat = 0;
      double w = 1.0;
      for (int a = 0; a < d_; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const int bit = (corner >> a) & 1U;
        flat = flat * static_cast<std::size_t>(g.shape[ua]) + static_cast<std::size_t>(base[ua] + bit);
        w *= bit ? frac[ua] : 1.0 - frac[ua];
      }
      v += w * g.samples[flat];
    }
    return std::max(0.0, v);
  }

  int d_;
  std::vector<GaussianComponent> gauss_;
  std::vector<IndicatorComponent> boxes_;
  std::vector<RadialBumpComponent> bumps_;
  std::optional<GridData> grid_;
};

inline Density operator+(Density a, const Density& b) {
  a += b;
  return a;
}

namespace detail {

inline double bump_box_mass(const RadialBumpComponent& b, const Point& lo, const Point& hi, int order,
                            int depth, double& err) {
  const std::size_t d = lo.size();
  // classify the box against the support ball
  double near = 0.0, far = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    const double c = b.center[a];
    const double gap = std::max({0.0, lo[a] - c, c - hi[a]});
    near += gap * gap;
    far += std::max(sq(lo[a] - c), sq(hi[a] - c));
  }
  const double r2 = b.radius * b.radius;
  if (near >= r2) return 0.0;
  bool contains = true;
  double volume = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    contains = contains && lo[a] <= b.center[a] - b.radius && hi[a] >= b.center[a] + b.radius;
    volume *= hi[a] - lo[a];
  }
  if (contains) {
    const double h = 0.5 * static_cast<double>(d);
    return b.weight * std::pow(b.radius, static_cast<double>(d)) * std::pow(pi, h) *
           std::exp(std::lgamma(b.power + 1.0) - std::lgamma(b.power + 1.0 + h));
  }
  auto f = [&](const Point& x) {
    const double t = 1.0 - dist2(x, b.center) / r2;
    return t > 0.0 ? b.weight * std::pow(t, b.power) : 0.0;
  };
  if (far <= r2) {
    const auto r = integrate_box(f, lo, hi, order);
    err += r.error;
    return r.value;
  }
  // boxes cut by the sphere: refine until the local estimate is small
  if (depth >= 2) {
    const auto r = integrate_box(f, lo, hi, order);
    if (depth >= 6 || r.error <= 1e-12 * b.weight * volume) {
      err += r.error;
      return r.value;
    }
  }
  double total = 0.0;
  for (std::uint32_t m = 0; m < (1U << d); ++m) {
    Point l(d), h(d);
    for (std::size_t a = 0; a < d; ++a) {
      const double mid = 0.5 * (lo[a] + hi[a]);
      l[a] = (m >> a) & 1U ? mid : lo[a];
      h[a] = (m >> a) & 1U ? hi[a] : mid;
    }
    total += bump_box_mass(b, l, h, order, depth + 1, err);
  }
  return total;
}

}  // namespace detail

/// int_Q rho with an error estimate (zero for closed-form components).
inline ErrorEstimate mass_with_error(const Density& rho, const Cube& Q, int order = 12) {
  if (Q.dim() != rho.dim()) throw DimensionMismatch("mass: cube and density dimensions differ");
  const int d = rho.dim();
  Point lo(static_cast<std::size_t>(d)), hi(lo.size());
  for (int a = 0; a < d; ++a) {
    lo[static_cast<std::size_t>(a)] = Q.lower(a);
    hi[static_cast<std::size_t>(a)] = Q.upper(a);
  }
  Accumulator m;
  double err = 0.0, scale = 0.0;
  for (const auto& g : rho.gaussians()) {
    double p = g.weight;
    for (int a = 0; a < d; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      p *= detail::normal_interval((lo[ua] - g.center[ua]) / g.sigma, (hi[ua] - g.center[ua]) / g.sigma);
    }
    m += p;
    scale += p;
  }
  for (const auto& b : rho.indicators()) {
    double v = b.weight;
    for (int a = 0; a < d; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      v *= std::max(0.0, std::min(hi[ua], b.cube.upper(a)) - std::max(lo[ua], b.cube.lower(a)));
    }
    m += v;
    scale += v;
  }
  for (const auto& b : rho.bumps()) {
    const double v = detail::bump_box_mass(b, lo, hi, order, 0, err);
    m += v;
    scale += std::abs(v);
  }
  if (rho.grid_data()) {
    const double v = rho.grid_box_mass(lo, hi);
    m += v;
    scale += v;
  }
  return {std::max(0.0, m.value()), err + rounding_floor(scale, 4)};
}

/// int_Q rho.
inline double mass(const Density& rho, const Cube& Q) { return mass_with_error(rho, Q).value; }

namespace detail {

// int over B(u, R) of rho by polar quadrature around u.
inline double polar_ball_integral(const ScalarField& f, int d, const Point& u, double R) {
  AdaptiveOptions opt;
  opt.order = 16;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-300;
  const int na = 24;
  const auto& rule = gauss_legendre(na);
  Point x(u.size());
  // spherical average of f on the sphere of radius r about u
  auto avg = [&](double r) {
    if (d == 1) {
      x[0] = u[0] + r;
      double s = f(x);
      x[0] = u[0] - r;
      return 0.5 * (s + f(x));
    }
    // hyperspherical angles: theta_1..theta_{d-2} in [0, pi], phi in [0, 2 pi]
    const int m = d - 1;
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    Accumulator acc;
    double norm = 0.0;
    while (true) {
      double w = 1.0, s = 1.0;
      for (int k = 0; k < m; ++k) {
        const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
        const bool last = k == m - 1;
        const double span = last ? 2.0 * pi : pi;
        const double t = 0.5 * span * (1.0 + rule.nodes[i]);
        const double wk = 0.5 * span * rule.weights[i];
        const double jac = last ? 1.0 : std::pow(std::sin(t), m - 1 - k);
        if (last) {
          x[static_cast<std::size_t>(k)] = u[static_cast<std::size_t>(k)] + r * s * std::cos(t);
          x[static_cast<std::size_t>(k + 1)] = u[static_cast<std::size_t>(k + 1)] + r * s * std::sin(t);
        } else {
          x[static_cast<std::size_t>(k)] = u[static_cast<std::size_t>(k)] + r * s * std::cos(t);
          s *= std::sin(t);
        }
        w *= wk * jac;
      }
      acc += w * f(x);
      norm += w;
      int k = m - 1;
      for (; k >= 0; --k) {
        if (++idx[static_cast<std::size_t>(k)] < na) break;
        idx[static_cast<std::size_t>(k)] = 0;
      }
      if (k < 0) break;
    }
    return acc.value() / norm;
  };
  return sphere_area(d) *
         integrate_interval([&](double r) { return std::pow(r, d - 1) * avg(r); }, 0.0, R, opt).value;
}

}  // namespace detail

/// f_R(u) = int over B(u, R) of rho.
inline double ball_mass(const Density& rho, const Point& u, double R) {
  if (static_cast<int>(u.size()) != rho.dim()) throw DimensionMismatch("ball_mass: point dimension");
  if (!(R > 0.0)) throw InvalidParameter("ball_mass: radius must be > 0");
  const int d = rho.dim();
  Accumulator m;
  for (const auto& g : rho.gaussians()) {
    const double D = std::sqrt(detail::dist2(u, g.center));
    const double s = g.sigma;
    if (d == 1) {
      m += g.weight * detail::normal_interval((u[0] - R - g.center[0]) / s, (u[0] + R - g.center[0]) / s);
    } else if (D == 0.0) {
      m += g.weight * boost::math::gamma_p(0.5 * d, R * R / (2.0 * s * s));
    } else {
      // slice along the axis through the center: x1 = R cos(theta)
      const double a = 0.5 * (d - 1);
      auto f = [&](double t) {
        const double x1 = R * std::cos(t);
        const double rest = R * R - x1 * x1;
        const double dens = std::exp(-detail::sq(x1 - D) / (2.0 * s * s)) / (std::sqrt(2.0 * pi) * s);
        return dens * (rest > 0.0 ? boost::math::gamma_p(a, rest / (2.0 * s * s)) : 0.0) * R * std::sin(t);
      };
      AdaptiveOptions opt;
      opt.order = 20;
      opt.rel_tol = 1e-13;
      opt.abs_tol = 1e-300;
      m += g.weight * integrate_interval(f, 0.0, pi, opt).value;
    }
  }
  for (const auto& b : rho.indicators()) {
    Point lo(static_cast<std::size_t>(d)), hi(lo.size());
    for (int a = 0; a < d; ++a) {
      lo[static_cast<std::size_t>(a)] = b.cube.lower(a);
      hi[static_cast<std::size_t>(a)] = b.cube.upper(a);
    }
    m += b.weight * detail::ball_box_volume(d, R, u.data(), lo.data(), hi.data());
  }
  for (const auto& b : rho.bumps()) {
    const double D = std::sqrt(detail::dist2(u, b.center));
    if (D + b.radius <= R) {
      m += b.mass(d);
    } else if (D == 0.0) {
      const double t = std::min(R, b.radius) / b.radius;
      m += b.weight * std::pow(b.radius, d) * 0.5 * sphere_area(d) *
           boost::math::ibeta(0.5 * d, b.power + 1.0, t * t) * boost::math::beta(0.5 * d, b.power + 1.0);
    } else if (D < R + b.radius) {
      Density single(d);
      single.add(b);
      m += detail::polar_ball_integral([&](const Point& x) { return single(x); }, d, u, R);
    }
  }
  if (rho.grid_data()) {
    Density only = Density::grid(*rho.grid_data());
    if (d == 1) {
      m += only.grid_box_mass(Point{u[0] - R}, Point{u[0] + R});
    } else {
      m += detail::polar_ball_integral([&](const Point& x) { return only(x); }, d, u, R);
    }
  }
  return std::max(0.0, m.value());
}

/// Geometric radius grid for the maximal function.
struct RadiusGrid {
  double r_min = 1e-4;
  double r_max = 1e3;
  int points = 64;
};

struct MaximalValue {
  double value = 0.0;   // best ball average found
  double radius = 0.0;  // radius attaining it
};

/// Lower bound on rho*(u) = sup_R f_R(u) / (|B_1| R^d): maximum over a
/// geometric grid, refined once by a bracketed minimization around the argmax.
inline MaximalValue maximal_function_detail(const Density& rho, const Point& u, const RadiusGrid& grid = {}) {
  if (grid.points < 2 || !(grid.r_min > 0.0) || !(grid.r_max > grid.r_min))
    throw InvalidParameter("maximal_function: empty or invalid radius grid");
  if (grid.points < 64) throw InvalidParameter("maximal_function: radius grid needs >= 64 points");
  const int d = rho.dim();
  const double vb = unit_ball_volume(d);
  auto avg = [&](double R) { return ball_mass(rho, u, R) / (vb * std::pow(R, d)); };
  const double ratio = std::pow(grid.r_max / grid.r_min, 1.0 / (grid.points - 1));
  MaximalValue best;
  int arg = 0;
  std::vector<double> radii(static_cast<std::size_t>(grid.points));
  for (int i = 0; i < grid.points; ++i) {
    radii[static_cast<std::size_t>(i)] = grid.r_min * std::pow(ratio, i);
    const double v = avg(radii[static_cast<std::size_t>(i)]);
    if (v > best.value) {
      best = {v, radii[static_cast<std::size_t>(i)]};
      arg = i;
    }
  }
  if (arg > 0 && arg + 1 < grid.points) {
    const double lo = std::log(radii[static_cast<std::size_t>(arg - 1)]);
    const double hi = std::log(radii[static_cast<std::size_t>(arg + 1)]);
    const auto r = boost::math::tools::brent_find_minima([&](double t) { return -avg(std::exp(t)); }, lo, hi, 40);
    if (-r.second > best.value) best = {-r.second, std::exp(r.first)};
  }
  return best;
}

inline double maximal_function(const Density& rho, const Point& u, const RadiusGrid& grid = {}) {
  return maximal_function_detail(rho, u, grid).value;
}

}  // namespace fraclt
