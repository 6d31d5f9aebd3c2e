#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"

namespace fraclt {

/// Axis-aligned cube. Cubes produced by `subdivide` remember their depth and
/// integer lattice position relative to the root cube, so faces, centers and
/// the center-of-root test are evaluated from exact rationals i / K instead of
/// accumulated floating-point offsets. Neighbouring cubes therefore report
/// bit-identical shared faces.
///
/// Point ownership follows a half-open convention: a cube owns [lo, hi) on
/// every axis, except that faces lying on the root's upper boundary are closed.
class Cube {
 public:
  Cube() = default;

  Cube(Point center, double side)
      : center_(std::move(center)),
        side_(side),
        root_side_(side),
        index_(center_.size(), 0),
        closed_upper_(center_.size(), true) {
    require(!center_.empty(), "cube dimension must be >= 1");
    require(side > 0.0 && std::isfinite(side), "cube side must be positive and finite");
    for (double c : center_) require(std::isfinite(c), "cube center must be finite");
    root_lo_.resize(center_.size());
    for (std::size_t a = 0; a < center_.size(); ++a) root_lo_[a] = center_[a] - 0.5 * side;
    root_center_ = center_;
  }

  static Cube from_bounds(double lo, double hi, int d) {
    require(d >= 1, "cube dimension must be >= 1");
    require(hi > lo, "cube bounds must satisfy hi > lo");
    Cube c(Point(static_cast<std::size_t>(d), 0.5 * (lo + hi)), hi - lo);
    std::fill(c.root_lo_.begin(), c.root_lo_.end(), lo);
    return c;
  }

  static Cube unit(int d) { return from_bounds(0.0, 1.0, d); }

  int dim() const { return static_cast<int>(center_.size()); }
  const Point& center() const { return center_; }
  double side() const { return side_; }
  int depth() const { return depth_; }
  const std::vector<std::int64_t>& lattice_index() const { return index_; }
  /// Number of lattice cells per axis at this depth, or 0 once it exceeds 2^53.
  std::int64_t lattice_extent() const { return extent_; }
  bool upper_closed(int axis) const { return closed_upper_[static_cast<std::size_t>(axis)]; }

  double lower(int axis) const { return face(axis, 0); }
  double upper(int axis) const { return face(axis, 1); }

  double volume() const { return std::pow(side_, dim()); }

  /// Center of the cube this one was subdivided from.
  const Point& root_center() const { return root_center_; }

  Point lower_corner() const {
    Point p(center_.size());
    for (int a = 0; a < dim(); ++a) p[static_cast<std::size_t>(a)] = lower(a);
    return p;
  }

  Point upper_corner() const {
    Point p(center_.size());
    for (int a = 0; a < dim(); ++a) p[static_cast<std::size_t>(a)] = upper(a);
    return p;
  }

  /// Cube scaled about the origin: center * factor, side * factor.
  Cube scaled(double factor) const {
    require(factor > 0.0 && std::isfinite(factor), "scale factor must be positive");
    Cube out = *this;
    for (auto& x : out.center_) x *= factor;
    for (auto& x : out.root_lo_) x *= factor;
    for (auto& x : out.root_center_) x *= factor;
    out.side_ *= factor;
    out.root_side_ *= factor;
    return out;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "Cube{center=" << format_point(center_) << ", side=" << side_ << ", depth=" << depth_
       << '}';
    return os.str();
  }

 private:
  friend std::vector<Cube> subdivide(const Cube& parent, int k);

  static constexpr std::int64_t kExactLimit = std::int64_t{1} << 53;

  double face(int axis, int offset) const {
    const auto a = static_cast<std::size_t>(axis);
    if (extent_ > 0) {
      const double q = static_cast<double>(index_[a] + offset) / static_cast<double>(extent_);
      return root_lo_[a] + root_side_ * q;
    }
    return center_[a] + (offset ? 0.5 : -0.5) * side_;
  }

  Point center_;
  double side_ = 1.0;
  Point root_lo_;
  Point root_center_;
  double root_side_ = 1.0;
  int depth_ = 0;
  std::int64_t extent_ = 1;
  std::vector<std::int64_t> index_;
  std::vector<bool> closed_upper_;
};

/// Split `parent` into k^d children of side parent.side()/k, ordered
/// lexicographically by lattice index with axis 0 most significant.
inline std::vector<Cube> subdivide(const Cube& parent, int k) {
  if (k < 2) throw InvalidParameter("subdivide: k must be >= 2, got " + std::to_string(k));
  const int d = parent.dim();
  std::size_t count = 1;
  for (int a = 0; a < d; ++a) count *= static_cast<std::size_t>(k);

  std::int64_t extent = 0;
  if (parent.extent_ > 0 && parent.extent_ <= Cube::kExactLimit / k) extent = parent.extent_ * k;

  const double child_side = parent.side_ / k;
  std::vector<Cube> out;
  out.reserve(count);
  std::vector<int> j(static_cast<std::size_t>(d), 0);
  for (std::size_t n = 0; n < count; ++n) {
    Cube c = parent;
    c.side_ = child_side;
    c.depth_ = parent.depth_ + 1;
    c.extent_ = extent;
    for (int a = 0; a < d; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      c.index_[ua] = extent > 0 ? parent.index_[ua] * k + j[ua] : 0;
      c.closed_upper_[ua] = parent.closed_upper_[ua] && j[ua] == k - 1;
      if (2 * j[ua] + 1 == k) {
        // the middle child of an odd split keeps the parent's center exactly
        c.center_[ua] = parent.center_[ua];
      } else if (extent > 0) {
        const double q = static_cast<double>(2 * c.index_[ua] + 1) / static_cast<double>(2 * extent);
        c.center_[ua] = parent.root_lo_[ua] + parent.root_side_ * q;
      } else {
        c.center_[ua] = parent.lower(a) + (j[ua] + 0.5) * child_side;
      }
    }
    out.push_back(std::move(c));
    for (int a = d - 1; a >= 0; --a) {
      auto& ja = j[static_cast<std::size_t>(a)];
      if (++ja < k) break;
      ja = 0;
    }
  }
  return out;
}

inline bool contains(const Cube& cube, const Point& x) {
  if (static_cast<int>(x.size()) != cube.dim())
    throw DimensionMismatch("contains: point dimension " + std::to_string(x.size()) +
                            " != cube dimension " + std::to_string(cube.dim()));
  for (int a = 0; a < cube.dim(); ++a) {
    const double xa = x[static_cast<std::size_t>(a)];
    if (xa < cube.lower(a)) return false;
    if (xa > cube.upper(a)) return false;
    if (xa == cube.upper(a) && !cube.upper_closed(a)) return false;
  }
  return true;
}

/// Euclidean distance from a point to the closed cube.
inline double distance(const Cube& cube, const Point& x) {
  if (static_cast<int>(x.size()) != cube.dim()) throw DimensionMismatch("distance: dimension mismatch");
  double s = 0.0;
  for (int a = 0; a < cube.dim(); ++a) {
    const double xa = x[static_cast<std::size_t>(a)];
    const double gap = std::max({0.0, cube.lower(a) - xa, xa - cube.upper(a)});
    s += gap * gap;
  }
  return std::sqrt(s);
}

/// True when the cube is centered at the center of the root it was split from.
inline bool shares_root_center(const Cube& cube) {
  const std::int64_t extent = cube.lattice_extent();
  if (extent == 0) {
    // beyond exact lattice range; middle children copy their parent's center bit for bit
    return cube.center() == cube.root_center();
  }
  for (auto i : cube.lattice_index())
    if (2 * i + 1 != extent) return false;
  return true;
}

/// dist(cube, root center) >= side(cube) / 2, decided exactly on the lattice
/// when possible.
inline bool far_from_root_center(const Cube& cube, const Point& root_center) {
  const std::int64_t extent = cube.lattice_extent();
  if (extent == 0) return distance(cube, root_center) >= 0.5 * cube.side();
  // In units of half a cell the root center sits at `extent` and the cube spans [2i, 2i + 2].
  __int128 s = 0;
  for (auto i : cube.lattice_index()) {
    const __int128 lo = 2 * static_cast<__int128>(i);
    const __int128 hi = lo + 2;
    __int128 gap = 0;
    if (extent < lo) gap = lo - extent;
    if (extent > hi) gap = extent - hi;
    s += gap * gap;
  }
  return s >= 1;
}

}  // namespace fraclt
