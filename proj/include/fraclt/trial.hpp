#pragma once

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "density.hpp"
#include "special.hpp"

namespace fraclt {

/// Real one-body function u on R^d.
///
///  Gaussian: norm * (pi w^2)^{-d/4} exp(-|x-c|^2 / (2 w^2))
///  Bump:     C (1 - |x-c|^2 / r^2)_+^p, C chosen so that ||u||_2 = norm
///  Affine:   slope . x + offset (only meaningful on bounded cubes)
///
/// All three families are closed under x -> lambda^{d/2} u(lambda (x - t)),
/// so `scaled` returns a function of the same kind.
class TrialFunction {
 public:
  enum class Kind { Gaussian, Bump, Affine };

  static TrialFunction gaussian(Point center, double width, double norm = 1.0) {
    require(!center.empty(), "trial function dimension must be >= 1");
    require(width > 0.0 && std::isfinite(width), "gaussian width must be > 0");
    require(norm > 0.0 && std::isfinite(norm), "L2 norm must be > 0");
    TrialFunction u(Kind::Gaussian, std::move(center));
    u.width_ = width;
    u.norm_ = norm;
    return u;
  }

  static TrialFunction bump(Point center, double radius, double power, double norm = 1.0) {
    require(!center.empty(), "trial function dimension must be >= 1");
    require(radius > 0.0 && std::isfinite(radius), "bump radius must be > 0");
    require(power > 0.0 && std::isfinite(power), "bump power must be > 0");
    require(norm > 0.0 && std::isfinite(norm), "L2 norm must be > 0");
    TrialFunction u(Kind::Bump, std::move(center));
    u.width_ = radius;
    u.power_ = power;
    u.norm_ = norm;
    return u;
  }

  static TrialFunction affine(Point slope, double offset) {
    require(!slope.empty(), "trial function dimension must be >= 1");
    TrialFunction u(Kind::Affine, Point(slope.size(), 0.0));
    u.slope_ = std::move(slope);
    u.offset_ = offset;
    return u;
  }

  /// lambda^{d/2} base(lambda (x - translation)).
  static TrialFunction scaled(const TrialFunction& base, const Point& translation, double dilation) {
    require(dilation > 0.0 && std::isfinite(dilation), "dilation must be > 0");
    if (static_cast<int>(translation.size()) != base.dim())
      throw DimensionMismatch("scaled: translation dimension");
    TrialFunction u = base;
    const double amp = std::pow(dilation, 0.5 * base.dim());
    if (base.kind_ == Kind::Affine) {
      double shift = 0.0;
      for (std::size_t a = 0; a < u.slope_.size(); ++a) {
        shift += base.slope_[a] * translation[a];
        u.slope_[a] = amp * dilation * base.slope_[a];
      }
      u.offset_ = amp * (base.offset_ - dilation * shift);
      return u;
    }
    for (std::size_t a = 0; a < u.center_.size(); ++a)
      u.center_[a] = base.center_[a] / dilation + translation[a];
    u.width_ = base.width_ / dilation;
    return u;
  }

  TrialFunction normalized() const {
    if (kind_ == Kind::Affine) throw CapabilityError("affine functions are not square integrable");
    TrialFunction u = *this;
    u.norm_ = 1.0;
    return u;
  }

  TrialFunction translated(const Point& t) const { return scaled(*this, t, 1.0); }

  int dim() const { return static_cast<int>(center_.size()); }
  Kind kind() const { return kind_; }
  const Point& center() const { return center_; }
  double width() const { return width_; }  // gaussian width or bump radius
  double power() const { return power_; }
  double norm() const { return norm_; }
  const Point& slope() const { return slope_; }
  double offset() const { return offset_; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::Gaussian:
        os << "gauss(c=" << format_point(center_) << ",w=" << width_ << ",norm=" << norm_ << ')';
        break;
      case Kind::Bump:
        os << "bump(c=" << format_point(center_) << ",r=" << width_ << ",p=" << power_ << ",norm=" << norm_
           << ')';
        break;
      case Kind::Affine:
        os << "affine(a=" << format_point(slope_) << ",b=" << offset_ << ')';
        break;
    }
    return os.str();
  }

  /// Peak value of u (Gaussian, Bump).
  double coefficient() const {
    const int d = dim();
    if (kind_ == Kind::Gaussian) return norm_ * std::pow(pi * width_ * width_, -0.25 * d);
    if (kind_ == Kind::Bump)
      return norm_ / std::sqrt(std::pow(width_, d) * 0.5 * sphere_area(d) *
                               boost::math::beta(0.5 * d, 2.0 * power_ + 1.0));
    throw CapabilityError("affine functions have no peak coefficient");
  }

  double operator()(const Point& x) const {
    check(x);
    switch (kind_) {
      case Kind::Gaussian:
        return coefficient() * std::exp(-dist2(x) / (2.0 * width_ * width_));
      case Kind::Bump: {
        const double t = 1.0 - dist2(x) / (width_ * width_);
        return t > 0.0 ? coefficient() * std::pow(t, power_) : 0.0;
      }
      case Kind::Affine: {
        double v = offset_;
        for (std::size_t a = 0; a < x.size(); ++a) v += slope_[a] * x[a];
        return v;
      }
    }
    return 0.0;
  }

  /// Classical derivative D^alpha u(x).
  double derivative(const std::vector<int>& alpha, const Point& x) const {
    check(x);
    if (alpha.size() != x.size()) throw DimensionMismatch("derivative: multi-index length");
    int order = 0;
    for (int a : alpha) {
      require(a >= 0, "derivative: negative multi-index entry");
      order += a;
    }
    if (order == 0) return (*this)(x);
    switch (kind_) {
      case Kind::Gaussian: {
        double v = coefficient();
        for (std::size_t a = 0; a < x.size(); ++a) {
          const double y = (x[a] - center_[a]) / width_;
          v *= std::exp(-0.5 * y * y);
          if (alpha[a] > 0) v *= std::pow(-1.0 / width_, alpha[a]) * hermite_he(alpha[a], y);
        }
        return v;
      }
      case Kind::Bump: {
        if (order > 1) throw CapabilityError("bump functions provide derivatives up to order 1 only");
        if (power_ < 1.0) throw CapabilityError("bump with power < 1 is not differentiable at its edge");
        const double t = 1.0 - dist2(x) / (width_ * width_);
        if (t <= 0.0) return 0.0;
        std::size_t axis = 0;
        while (alpha[axis] == 0) ++axis;
        return coefficient() * power_ * std::pow(t, power_ - 1.0) * (-2.0 * (x[axis] - center_[axis])) /
               (width_ * width_);
      }
      case Kind::Affine: {
        if (order > 1) return 0.0;
        std::size_t axis = 0;
        while (alpha[axis] == 0) ++axis;
        return slope_[axis];
      }
    }
    return 0.0;
  }

  /// |grad u(x)|.
  double gradient_norm(const Point& x) const {
    double s = 0.0;
    std::vector<int> alpha(x.size(), 0);
    for (std::size_t a = 0; a < x.size(); ++a) {
      alpha[a] = 1;
      const double g = derivative(alpha, x);
      s += g * g;
      alpha[a] = 0;
    }
    return std::sqrt(s);
  }

  double l2_squared() const {
    if (kind_ == Kind::Affine) throw CapabilityError("affine functions are not square integrable");
    return norm_ * norm_;
  }

  /// int |u|^q, q > 0.
  double lp_integral(double q) const {
    require(q > 0.0, "lp_integral: exponent must be > 0");
    if (kind_ == Kind::Affine) throw CapabilityError("affine functions are not integrable on R^d");
    const int d = dim();
    const double C = coefficient();
    if (kind_ == Kind::Gaussian) return std::pow(C, q) * std::pow(2.0 * pi * width_ * width_ / q, 0.5 * d);
    return std::pow(C, q) * std::pow(width_, d) * 0.5 * sphere_area(d) *
           boost::math::beta(0.5 * d, power_ * q + 1.0);
  }

  /// |u|^q as a density.
  Density power_density(double q) const {
    require(q > 0.0, "power_density: exponent must be > 0");
    if (kind_ == Kind::Affine) throw CapabilityError("affine functions do not define a density on R^d");
    const double C = coefficient();
    if (kind_ == Kind::Gaussian)
      return Density::gaussian_mixture(
          dim(), {{lp_integral(q), center_, width_ / std::sqrt(q)}});
    return Density::radial_bump_mixture(dim(), {{std::pow(C, q), center_, width_, power_ * q}});
  }

  Density density() const { return power_density(2.0); }

  /// |u-hat(k)|^2 at |k| = k for the unitary Fourier transform.
  double fourier_abs2(double k) const {
    const int d = dim();
    if (kind_ == Kind::Gaussian)
      return norm_ * norm_ * std::pow(width_ * width_ / pi, 0.5 * d) * std::exp(-width_ * width_ * k * k);
    if (kind_ == Kind::Bump) {
      const double nu = 0.5 * d + power_;
      const double x = width_ * k;
      const double C = coefficient();
      double ratio;  // x^{-nu} J_nu(x)
      if (x < 1e-4)
        ratio = std::pow(0.5, nu) / std::tgamma(nu + 1.0) * (1.0 - x * x / (4.0 * (nu + 1.0)));
      else
        ratio = boost::math::cyl_bessel_j(nu, x) * std::pow(x, -nu);
      const double amp = C * std::pow(width_, d) * std::tgamma(power_ + 1.0) * std::pow(2.0, power_) * ratio;
      return amp * amp;
    }
    throw CapabilityError("affine functions have no Fourier transform");
  }

 private:
  TrialFunction(Kind k, Point c) : kind_(k), center_(std::move(c)) {}

  void check(const Point& x) const {
    if (x.size() != center_.size()) throw DimensionMismatch("trial function: point dimension");
  }

  double dist2(const Point& x) const {
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - center_[a]) * (x[a] - center_[a]);
    return s;
  }

  Kind kind_;
  Point center_;
  double width_ = 1.0;
  double power_ = 0.0;
  double norm_ = 1.0;
  Point slope_;
  double offset_ = 0.0;
};

}  // namespace fraclt
