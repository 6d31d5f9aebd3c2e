#pragma once

// Small expression language for densities and trial functions.
//
//   density  := term ('+' term)*
//   term     := [number '*'] call
//   call     := name '(' [name '=' value (',' name '=' value)*] ')'
//   value    := number | '[' number (',' number)* ']' | '[' lo ',' hi ']' '^' d
//
// Density calls:
//   gauss(w=1, c=[..], s=1)         mass w, center c, standard deviation s
//   uniform(cube=[lo,hi]^d, v=1)    value v on the cube
//   uniform(c=[..], side=1, v=1)
//   bump(v=1, c=[..], r=1, p=2)     v (1 - |x-c|^2/r^2)_+^p
//   zero()
// Trial calls (a single call, no sums):
//   gauss(s=1, c=[..], n=1)         width s, L2 norm n
//   bump(r=1, p=2, c=[..], n=1)
//   affine(a=[..], b=0)
//
// Omitted centers are the origin. The dimension comes from the caller or, when
// that is 0, from the first vector or cube literal.

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "density.hpp"
#include "trial.hpp"

namespace fraclt {

namespace detail {

struct Value {
  std::vector<double> numbers;
  bool is_vector = false;
  int cube_dim = 0;  // > 0 for [lo,hi]^d

  double scalar(const std::string& key) const {
    if (is_vector || numbers.size() != 1) throw ParseError("argument '" + key + "' must be a number");
    return numbers[0];
  }
};

struct Call {
  double factor = 1.0;
  std::string name;
  std::map<std::string, Value> args;
  std::size_t pos = 0;
};

class ExprParser {
 public:
  explicit ExprParser(const std::string& text) : s_(text) {}

  std::vector<Call> sum() {
    std::vector<Call> out;
    out.push_back(term());
    skip();
    while (i_ < s_.size() && s_[i_] == '+') {
      ++i_;
      out.push_back(term());
      skip();
    }
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return out;
  }

  Value single() {
    Value v = value();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("parse error at column " + std::to_string(i_ + 1) + ": " + what + " in \"" + s_ + "\"");
  }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  void expect(char c) {
    skip();
    if (i_ >= s_.size() || s_[i_] != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  bool peek(char c) {
    skip();
    return i_ < s_.size() && s_[i_] == c;
  }

  double number() {
    skip();
    const char* begin = s_.c_str() + i_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    i_ += static_cast<std::size_t>(end - begin);
    if (!std::isfinite(v)) fail("non-finite number");
    return v;
  }

  std::string name() {
    skip();
    const std::size_t start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
    if (start == i_) fail("expected a name");
    return s_.substr(start, i_ - start);
  }

  Value value() {
    Value v;
    if (!peek('[')) {
      v.numbers.push_back(number());
      return v;
    }
    ++i_;
    v.is_vector = true;
    v.numbers.push_back(number());
    while (peek(',')) {
      ++i_;
      v.numbers.push_back(number());
    }
    expect(']');
    if (peek('^')) {
      ++i_;
      if (v.numbers.size() != 2) fail("cube literal needs exactly [lo,hi]");
      const double d = number();
      if (d < 1 || d != std::floor(d) || d > 16) fail("cube dimension must be a small positive integer");
      v.cube_dim = static_cast<int>(d);
    }
    return v;
  }

  Call term() {
    Call c;
    skip();
    c.pos = i_;
    if (i_ < s_.size() && !std::isalpha(static_cast<unsigned char>(s_[i_]))) {
      c.factor = number();
      expect('*');
    }
    c.name = name();
    expect('(');
    if (!peek(')')) {
      for (;;) {
        const std::string key = name();
        expect('=');
        if (c.args.count(key)) fail("duplicate argument '" + key + "'");
        c.args[key] = value();
        if (!peek(',')) break;
        ++i_;
      }
    }
    expect(')');
    return c;
  }

  std::string s_;
  std::size_t i_ = 0;
};

class CallReader {
 public:
  CallReader(const Call& c, int& dim, std::initializer_list<const char*> allowed) : c_(c), dim_(dim) {
    for (const auto& [key, v] : c.args) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw ParseError(c.name + ": unknown argument '" + key + "'");
      const int d = v.cube_dim > 0 ? v.cube_dim : (v.is_vector ? static_cast<int>(v.numbers.size()) : 0);
      if (d > 0) fix_dim(d, key);
    }
  }

  double scalar(const char* key, double fallback) const {
    const auto it = c_.args.find(key);
    return it == c_.args.end() ? fallback : it->second.scalar(key);
  }

  std::optional<Value> raw(const char* key) const {
    const auto it = c_.args.find(key);
    if (it == c_.args.end()) return std::nullopt;
    return it->second;
  }

  Point vec(const char* key) const {
    const auto it = c_.args.find(key);
    if (it == c_.args.end()) return Point(static_cast<std::size_t>(need_dim()), 0.0);
    if (!it->second.is_vector || it->second.cube_dim > 0)
      throw ParseError(c_.name + ": argument '" + key + "' must be a vector");
    return it->second.numbers;
  }

  int need_dim() const {
    if (dim_ <= 0) throw ParseError(c_.name + ": dimension unknown; give a center or a dimension");
    return dim_;
  }

 private:
  void fix_dim(int d, const std::string& key) {
    if (dim_ <= 0) dim_ = d;
    if (dim_ != d)
      throw ParseError(c_.name + ": argument '" + key + "' has dimension " + std::to_string(d) + ", expected " +
                       std::to_string(dim_));
  }

  const Call& c_;
  int& dim_;
};

// InvalidParameter from the constructors is reported as a parse error.
template <class F>
auto as_parse_error(const std::string& what, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidParameter& e) {
    throw ParseError(what + ": " + e.what());
  }
}

}  // namespace detail

inline Density parse_density(const std::string& text, int dim = 0) {
  auto calls = detail::ExprParser(text).sum();
  int d = dim;
  Density out(1);
  bool started = false;
  for (const auto& c : calls) {
    Density part(1);
    if (c.name == "gauss") {
      detail::CallReader r(c, d, {"w", "c", "s"});
      const double w = c.factor * r.scalar("w", 1.0);
      const double s = r.scalar("s", 1.0);
      if (!(w > 0.0)) throw ParseError("gauss: weight must be > 0");
      if (!(s > 0.0)) throw ParseError("gauss: s must be > 0");
      part = detail::as_parse_error("gauss", [&] { return Density::gaussian_mixture(r.need_dim(), {{w, r.vec("c"), s}}); });
    } else if (c.name == "uniform") {
      detail::CallReader r(c, d, {"cube", "c", "side", "v"});
      const double v = c.factor * r.scalar("v", 1.0);
      if (!(v > 0.0)) throw ParseError("uniform: value must be > 0");
      Cube q;
      if (auto cube = r.raw("cube")) {
        if (cube->cube_dim == 0) throw ParseError("uniform: cube must be written [lo,hi]^d");
        if (r.raw("c") || r.raw("side")) throw ParseError("uniform: give either cube or c/side");
        q = detail::as_parse_error("uniform", [&] { return Cube::from_bounds(cube->numbers[0], cube->numbers[1], cube->cube_dim); });
      } else {
        q = detail::as_parse_error("uniform", [&] { return Cube(r.vec("c"), r.scalar("side", 1.0)); });
      }
      part = Density::indicator_mixture(q.dim(), {{v, q}});
    } else if (c.name == "bump") {
      detail::CallReader r(c, d, {"v", "c", "r", "p"});
      const double v = c.factor * r.scalar("v", 1.0);
      const double rad = r.scalar("r", 1.0), pw = r.scalar("p", 2.0);
      if (!(v > 0.0) || !(rad > 0.0) || !(pw > 0.0)) throw ParseError("bump: v, r and p must be > 0");
      part = Density::radial_bump_mixture(r.need_dim(), {{v, r.vec("c"), rad, pw}});
    } else if (c.name == "zero") {
      detail::CallReader r(c, d, {});
      part = Density(r.need_dim());
    } else {
      throw ParseError("unknown density '" + c.name + "'");
    }
    if (!started) {
      out = part;
      started = true;
    } else {
      out += part;
    }
  }
  return out;
}

inline TrialFunction parse_trial(const std::string& text, int dim = 0) {
  auto calls = detail::ExprParser(text).sum();
  if (calls.size() != 1) throw ParseError("a trial function is a single call");
  const auto& c = calls[0];
  int d = dim;
  if (c.factor != 1.0) throw ParseError("trial functions take their scale from n=");
  if (c.name == "gauss") {
    detail::CallReader r(c, d, {"s", "c", "n"});
    return detail::as_parse_error(
        "gauss", [&] { return TrialFunction::gaussian(r.vec("c"), r.scalar("s", 1.0), r.scalar("n", 1.0)); });
  }
  if (c.name == "bump") {
    detail::CallReader r(c, d, {"r", "p", "c", "n"});
    return detail::as_parse_error("bump", [&] {
      return TrialFunction::bump(r.vec("c"), r.scalar("r", 1.0), r.scalar("p", 2.0), r.scalar("n", 1.0));
    });
  }
  if (c.name == "affine") {
    detail::CallReader r(c, d, {"a", "b"});
    return TrialFunction::affine(r.vec("a"), r.scalar("b", 0.0));
  }
  throw ParseError("unknown trial function '" + c.name + "'");
}

/// A cube literal "[lo,hi]^d".
inline Cube parse_cube(const std::string& text) {
  const auto v = detail::ExprParser(text).single();
  if (v.cube_dim == 0) throw ParseError("expected a cube literal [lo,hi]^d, got \"" + text + "\"");
  return detail::as_parse_error("cube", [&] { return Cube::from_bounds(v.numbers[0], v.numbers[1], v.cube_dim); });
}

}  // namespace fraclt
