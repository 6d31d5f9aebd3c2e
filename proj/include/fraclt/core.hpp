#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fraclt {

using Point = std::vector<double>;

/// Value of a numerical integral together with an absolute error estimate
/// obtained by comparing two quadrature orders.
struct ErrorEstimate {
  double value = 0.0;
  double error = 0.0;
};

inline ErrorEstimate operator+(ErrorEstimate a, ErrorEstimate b) {
  return {a.value + b.value, a.error + b.error};
}

inline ErrorEstimate operator*(double c, ErrorEstimate a) {
  return {c * a.value, std::abs(c) * a.error};
}

/// Record of a checked inequality lhs >= rhs. `tol` is the propagated
/// quadrature error; the inequality counts as satisfied when lhs - rhs >= -tol.
struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;
  bool satisfied = false;

  double margin() const { return lhs - rhs; }
};

inline InequalityReport make_report(std::string name, double lhs, double rhs, double tol) {
  InequalityReport r{std::move(name), lhs, rhs, tol, false};
  r.satisfied = (lhs - rhs) >= -tol;
  return r;
}

// Relative rounding floor for sums of n terms whose magnitudes add to `scale`.
inline double rounding_floor(double scale, std::size_t n) {
  return 8.0 * std::numeric_limits<double>::epsilon() * scale * static_cast<double>(n + 1);
}

/// Compensated (Neumaier) summation. Deterministic for a fixed term order.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  Accumulator& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidParameter {
 public:
  using InvalidParameter::InvalidParameter;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A non-finite integrand sample; carries the offending node.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Point node) : Error(what), node_(std::move(node)) {}
  const Point& node() const { return node_; }

 private:
  Point node_;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Recursive subdivision hit its depth guard; carries the offending cube.
class NonTerminationError : public Error {
 public:
  NonTerminationError(const std::string& what, std::string cube) : Error(what), cube_(std::move(cube)) {}
  const std::string& cube() const { return cube_; }

 private:
  std::string cube_;
};

/// A regression or optimization had too little data to be meaningful.
class FitError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

inline std::string format_point(const Point& p) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ']';
  return os.str();
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidParameter(what);
}

}  // namespace fraclt
