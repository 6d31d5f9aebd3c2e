#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "core.hpp"
#include "covering.hpp"
#include "density.hpp"
#include "quadrature.hpp"
#include "seminorm.hpp"
#include "special.hpp"
#include "trial.hpp"

namespace fraclt {

/// numerator / denominator with the pieces that went into both.
struct QuotientResult {
  std::string name;
  double numerator = 0.0;
  double denominator = 0.0;
  double quotient = 0.0;
  double tol = 0.0;
  std::map<std::string, double> params;
  std::map<std::string, double> parts;
};

namespace detail {

inline QuotientResult make_quotient(std::string name, double num, double den, double rel_err) {
  if (!(den > 0.0) || !std::isfinite(den)) throw ConsistencyError(name + ": denominator must be positive");
  QuotientResult q;
  q.name = std::move(name);
  q.numerator = num;
  q.denominator = den;
  q.quotient = num / den;
  q.tol = std::abs(q.quotient) * rel_err + rounding_floor(std::abs(q.quotient), 8);
  return q;
}

inline double rel(const ErrorEstimate& e) { return e.value != 0.0 ? e.error / std::abs(e.value) : 0.0; }

inline void require_subcritical(double s, int d, const char* what) {
  if (!(s > 0.0)) throw InvalidParameter(std::string(what) + ": s must be > 0");
  if (!(2.0 * s < d)) throw DivergenceError(std::string(what) + ": requires 0 < s < d/2");
}

/// Golden-section search for a minimum of a unimodal f on [lo, hi].
template <class F>
double golden_minimize(F f, double lo, double hi, double* arg, int iters = 200) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters && (b - a) > 1e-15 * (std::abs(a) + std::abs(b)); ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  const double x = f1 <= f2 ? x1 : x2;
  if (arg) *arg = x;
  return std::min(f1, f2);
}

/// Grid scan on [lo, hi] followed by golden-section refinement around the best point.
template <class F>
double scan_minimize(F f, double lo, double hi, int points, double* arg) {
  int best = 0;
  double fb = INFINITY;
  std::vector<double> xs(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    const double v = f(xs[static_cast<std::size_t>(i)]);
    if (v < fb) {
      fb = v;
      best = i;
    }
  }
  const double a = xs[static_cast<std::size_t>(std::max(best - 1, 0))];
  const double b = xs[static_cast<std::size_t>(std::min(best + 1, points - 1))];
  double x = xs[static_cast<std::size_t>(best)];
  const double v = golden_minimize(f, a, b, &x);
  if (v <= fb) {
    if (arg) *arg = x;
    return v;
  }
  if (arg) *arg = xs[static_cast<std::size_t>(best)];
  return fb;
}

/// Runs fn(i) for i < n on a bounded pool. Results must be written by index,
/// so the outcome does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, F fn, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

/// int |u|^q over Q.
inline ErrorEstimate cube_power_integral(const TrialFunction& u, const Cube& Q, double q) {
  if (u.kind() == TrialFunction::Kind::Affine)
    return integrate_cube([&](const Point& x) { return std::pow(std::abs(u(x)), q); }, Q);
  return mass_with_error(u.power_density(q), Q);
}

}  // namespace detail

/// Sharp constant S in <u, (-Delta)^s u> >= S ||u||_{2d/(d-2s)}^2.
inline double sobolev_constant(int d, double s) {
  detail::require_subcritical(s, d, "sobolev_constant");
  return std::pow(2.0, 2.0 * s) * std::pow(pi, s) *
         std::exp(std::lgamma(0.5 * (d + 2.0 * s)) - std::lgamma(0.5 * (d - 2.0 * s)) +
                  (2.0 * s / d) * (std::lgamma(0.5 * d) - std::lgamma(static_cast<double>(d))));
}

// ---------------------------------------------------------------------------
// One-body quotients

inline QuotientResult gn_quotient(const TrialFunction& u, double s) {
  require(s > 0.0, "gn_quotient: s must be > 0");
  const TrialFunction v = u.normalized();
  const int d = v.dim();
  const auto kin = hs_fullspace_detail(v, s);
  const double lp = v.lp_integral(2.0 * (1.0 + 2.0 * s / d));
  auto q = detail::make_quotient("gn", kin.value, lp, detail::rel(kin));
  q.params = {{"d", d}, {"s", s}};
  q.parts = {{"kinetic", kin.value}, {"lp", lp}};
  return q;
}

inline QuotientResult lt_interpolation_quotient(const TrialFunction& u, double s) {
  const int d = u.dim();
  detail::require_subcritical(s, d, "lt_interpolation_quotient");
  const double th = 2.0 * s / d;
  const TrialFunction v = u.normalized();
  const auto kin = hs_fullspace_detail(v, s);
  const auto rz = riesz_energy(v.density(), 2.0 * s);
  const double lp = v.lp_integral(2.0 * (1.0 + th));
  const double num = std::pow(kin.value, 1.0 - th) * std::pow(rz.value, th);
  auto q = detail::make_quotient("lt", num, lp, (1.0 - th) * detail::rel(kin) + th * detail::rel(rz));
  q.params = {{"d", d}, {"s", s}};
  q.parts = {{"kinetic", kin.value}, {"riesz", rz.value}, {"lp", lp}};
  return q;
}

inline QuotientResult hlt_interpolation_quotient(const TrialFunction& u, double s) {
  const int d = u.dim();
  detail::require_subcritical(s, d, "hlt_interpolation_quotient");
  const double th = 2.0 * s / d;
  const TrialFunction v = u.normalized();
  const auto kin = hs_fullspace_detail(v, s);
  const auto hardy = hardy_functional_detail(v, s);
  const double ch = hardy_constant(d, s);
  double gap = kin.value - ch * hardy.value;
  const double gap_tol = kin.error + ch * hardy.error + rounding_floor(kin.value, 4);
  if (gap < -gap_tol)
    throw ConsistencyError("hlt_interpolation_quotient: negative Hardy gap " + std::to_string(gap));
  gap = std::max(gap, 0.0);
  const auto rz = riesz_energy(v.density(), 2.0 * s);
  const double lp = v.lp_integral(2.0 * (1.0 + th));
  const double num = std::pow(gap, 1.0 - th) * std::pow(rz.value, th);
  const double rel_gap = gap > 0.0 ? gap_tol / gap : 0.0;
  auto q = detail::make_quotient("hlt", num, lp, (1.0 - th) * rel_gap + th * detail::rel(rz));
  q.params = {{"d", d}, {"s", s}};
  q.parts = {{"kinetic", kin.value}, {"hardy", hardy.value}, {"hardy_constant", ch},
             {"gap", gap},          {"riesz", rz.value},    {"lp", lp}};
  return q;
}

/// int |grad u|^p over R^d for the radial families.
inline ErrorEstimate gradient_power_integral(const TrialFunction& u, double p) {
  if (u.kind() == TrialFunction::Kind::Affine)
    throw CapabilityError("gradient_power_integral: affine functions are not integrable");
  const int d = u.dim();
  Point x = u.center();
  auto g = [&](double r) {
    Point y = x;
    y[0] += r;
    return std::pow(u.gradient_norm(y), p) * std::pow(r, d - 1);
  };
  AdaptiveOptions opt;
  opt.abs_tol = 1e-300;
  opt.rel_tol = 1e-12;
  opt.scale = u.width();
  const double b = u.kind() == TrialFunction::Kind::Bump ? u.width() : INFINITY;
  return sphere_area(d) * integrate_radial(g, 0.0, b, opt);
}

/// (int |grad u|^{2s})^{1-2s/d} (int int |u|^{2s} |u|^{2s} |x-y|^{-2s})^{2s/d} / int |u|^{2s(1+2s/d)}.
inline QuotientResult iso_quotient(const TrialFunction& u, double s) {
  const int d = u.dim();
  if (d < 2) throw InvalidParameter("iso_quotient: requires d >= 2");
  if (!(s >= 0.5 && 2.0 * s < d)) throw InvalidParameter("iso_quotient: requires 1/2 <= s < d/2");
  const double th = 2.0 * s / d;
  const auto grad = gradient_power_integral(u, 2.0 * s);
  const auto rz = riesz_energy(u.power_density(2.0 * s), 2.0 * s);
  const double lp = u.lp_integral(2.0 * s * (1.0 + th));
  const double num = std::pow(grad.value, 1.0 - th) * std::pow(rz.value, th);
  auto q = detail::make_quotient("iso", num, lp, (1.0 - th) * detail::rel(grad) + th * detail::rel(rz));
  q.params = {{"d", d}, {"s", s}};
  q.parts = {{"gradient", grad.value}, {"riesz", rz.value}, {"lp", lp}};
  return q;
}

namespace detail {

inline QuotientResult product_from_parts(double kin, double rz, double lp, int N, double lambda, double s, int d,
                                         double rel_err) {
  const double interaction = lambda * 0.5 * N * (N - 1.0) * rz;
  const double num = N * kin + interaction;
  const double den = std::pow(static_cast<double>(N), 1.0 + 2.0 * s / d) * lp;
  auto q = make_quotient("product", num, den, rel_err);
  q.params = {{"d", d}, {"s", s}, {"N", N}, {"lambda", lambda}};
  q.parts = {{"kinetic", kin}, {"riesz", rz}, {"lp", lp}, {"interaction", interaction}};
  return q;
}

}  // namespace detail

/// [N T(u) + lambda N(N-1)/2 D(u)] / [N^{1+2s/d} int |u|^{2(1+2s/d)}] for the
/// product state u^{(x)N}; an upper bound on the many-body constant.
inline QuotientResult product_state_quotient(const TrialFunction& u, int N, double lambda, double s) {
  require(N >= 1, "product_state_quotient: N must be >= 1");
  require(lambda >= 0.0, "product_state_quotient: lambda must be >= 0");
  require(s > 0.0, "product_state_quotient: s must be > 0");
  const int d = u.dim();
  const TrialFunction v = u.normalized();
  const auto kin = hs_fullspace_detail(v, s);
  ErrorEstimate rz;
  if (lambda > 0.0 && N > 1) {
    detail::require_subcritical(s, d, "product_state_quotient");
    rz = riesz_energy(v.density(), 2.0 * s);
  }
  const double lp = v.lp_integral(2.0 * (1.0 + 2.0 * s / d));
  return detail::product_from_parts(kin.value, rz.value, lp, N, lambda, s, d, detail::rel(kin) + detail::rel(rz));
}

// ---------------------------------------------------------------------------
// mu optimization

struct MuRatio {
  double closed_form = 0.0;
  double grid_infimum = 0.0;
  double t_star = 0.0;
  double rel_diff = 0.0;
};

/// inf_{t>0} (1 + t/2) t^{-2s/d} in closed form and by direct minimization.
inline MuRatio mu_optimized_ratio_detail(double s, int d) {
  detail::require_subcritical(s, d, "mu_optimized_ratio");
  const double b = 2.0 * s / d;
  MuRatio r;
  r.closed_form = std::pow(1.0 - b, -1.0 + b) * std::pow(d / (4.0 * s), b);
  auto f = [&](double logt) {
    const double t = std::exp(logt);
    return (1.0 + 0.5 * t) * std::exp(-b * logt);
  };
  double arg = 0.0;
  r.grid_infimum = detail::scan_minimize(f, std::log(1e-10), std::log(1e10), 801, &arg);
  r.t_star = std::exp(arg);
  r.rel_diff = std::abs(r.grid_infimum - r.closed_form) / r.closed_form;
  return r;
}

inline double mu_optimized_ratio(double s, int d) {
  const MuRatio r = mu_optimized_ratio_detail(s, d);
  if (r.rel_diff > 1e-6)
    throw ConsistencyError("mu_optimized_ratio: closed form and direct minimum disagree by " +
                           std::to_string(r.rel_diff));
  return r.closed_form;
}

// ---------------------------------------------------------------------------
// Separated trial states

/// First N points of the cubic lattice with the given spacing, filled
/// lexicographically inside the smallest cube that holds N points.
inline std::vector<Point> lattice_centers(int N, int d, double spacing = 1.5) {
  require(N >= 1 && d >= 1, "lattice_centers: N and d must be >= 1");
  int side = 1;
  while (std::pow(static_cast<double>(side), d) < N) ++side;
  std::vector<Point> out;
  std::vector<int> j(static_cast<std::size_t>(d), 0);
  while (static_cast<int>(out.size()) < N) {
    Point p(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) p[static_cast<std::size_t>(a)] = spacing * j[static_cast<std::size_t>(a)];
    out.push_back(p);
    for (int a = d - 1; a >= 0; --a) {
      if (++j[static_cast<std::size_t>(a)] < side) break;
      j[static_cast<std::size_t>(a)] = 0;
    }
  }
  return out;
}

/// Energy quotient of the symmetrized state built from N translates
/// u(x - R y_i) of a compactly supported profile. The interaction is the exact
/// pairwise cross energy; parts["paper_form"] holds the cruder bound
/// lambda 3^{2s}/2 N^2 R^{-2s} for comparison.
inline QuotientResult separated_trial_quotient(const TrialFunction& profile, int N, double R, double lambda, double s,
                                               const std::vector<Point>& centers) {
  const int d = profile.dim();
  require(N >= 1, "separated_trial_quotient: N must be >= 1");
  require(R > 0.0, "separated_trial_quotient: R must be > 0");
  require(lambda >= 0.0, "separated_trial_quotient: lambda must be >= 0");
  require(s > 0.0, "separated_trial_quotient: s must be > 0");
  if (static_cast<int>(centers.size()) != N) throw InvalidParameter("separated_trial_quotient: need N centers");
  if (profile.kind() != TrialFunction::Kind::Bump)
    throw CapabilityError("separated_trial_quotient: the profile must have compact support");
  double c0 = 0.0;
  for (double c : profile.center()) c0 += c * c;
  if (std::sqrt(c0) + profile.width() > R / 3.0)
    throw PreconditionError("separated_trial_quotient: profile support exceeds B(0, R/3)");
  for (int i = 0; i < N; ++i) {
    if (static_cast<int>(centers[static_cast<std::size_t>(i)].size()) != d)
      throw DimensionMismatch("separated_trial_quotient: center dimension");
    for (int j = 0; j < i; ++j)
      if (!(std::sqrt(detail::dist2(centers[static_cast<std::size_t>(i)], centers[static_cast<std::size_t>(j)])) > 1.0))
        throw PreconditionError("separated_trial_quotient: overlapping supports (|y_i - y_j| <= 1)");
  }

  const TrialFunction v = profile.normalized();
  const auto kin = hs_fullspace_detail(v, s);
  const double lp = v.lp_integral(2.0 * (1.0 + 2.0 * s / d));
  ErrorEstimate inter;
  if (lambda > 0.0 && N > 1) {
    detail::require_subcritical(s, d, "separated_trial_quotient");
    // the cross energy depends only on the distance between translates
    std::map<double, ErrorEstimate> cache;
    const Density base = v.density();
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        const double D = R * std::sqrt(detail::dist2(centers[static_cast<std::size_t>(i)], centers[static_cast<std::size_t>(j)]));
        auto it = cache.find(D);
        if (it == cache.end()) {
          Point shift(static_cast<std::size_t>(d), 0.0);
          shift[0] = D;
          const Density other = v.translated(shift).density();
          it = cache.emplace(D, riesz_cross_energy(base, other, 2.0 * s)).first;
        }
        inter = inter + it->second;
      }
  }
  const double num = N * kin.value + lambda * inter.value;
  auto q = detail::make_quotient("separated", num, N * lp, detail::rel(kin) + detail::rel(inter));
  const double paper_int = lambda * 0.5 * std::pow(3.0, 2.0 * s) * N * static_cast<double>(N) * std::pow(R, -2.0 * s);
  q.params = {{"d", d}, {"s", s}, {"N", N}, {"lambda", lambda}, {"R", R}};
  q.parts = {{"kinetic", kin.value},
             {"lp", lp},
             {"interaction", lambda * inter.value},
             {"gn", kin.value / lp},
             {"paper_form_interaction", paper_int},
             {"paper_form", (N * kin.value + paper_int) / (N * lp)}};
  return q;
}

// ---------------------------------------------------------------------------
// Coupling dependence

struct LambdaScalingRow {
  double lambda = 0.0;
  int N = 0;
  double width = 0.0;
  double quotient = 0.0;
};

struct LambdaScaling {
  double s = 0.0;
  int d = 0;
  std::vector<LambdaScalingRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double expected = 0.0;
  bool nondecreasing = false;
  bool concave = false;
};

/// For each lambda, the minimum of the product-state quotient over Gaussian
/// widths and integer N >= 2; then a least-squares fit of log q against log lambda.
inline LambdaScaling lambda_scaling_experiment(double s, int d, const std::vector<double>& lambdas,
                                               const std::vector<double>& widths = {0.5, 1.0, 2.0}) {
  detail::require_subcritical(s, d, "lambda_scaling_experiment");
  if (lambdas.size() < 2) throw FitError("lambda_scaling_experiment: need at least two coupling values");
  for (double l : lambdas) require(l > 0.0, "lambda_scaling_experiment: couplings must be > 0");
  require(!widths.empty(), "lambda_scaling_experiment: empty width list");
  const auto [lmin, lmax] = std::minmax_element(lambdas.begin(), lambdas.end());
  if (*lmax / *lmin < 100.0) throw FitError("lambda_scaling_experiment: coupling grid must span two decades");

  const double th = 2.0 * s / d;
  struct Parts {
    double w, kin, rz, lp;
  };
  std::vector<Parts> parts;
  for (double w : widths) {
    const auto u = TrialFunction::gaussian(Point(static_cast<std::size_t>(d), 0.0), w);
    parts.push_back({w, hs_fullspace(u, s), riesz_energy(u.density(), 2.0 * s).value, u.lp_integral(2.0 * (1.0 + th))});
  }

  LambdaScaling out;
  out.s = s;
  out.d = d;
  out.expected = th;
  std::vector<double> sorted(lambdas);
  std::sort(sorted.begin(), sorted.end());
  for (double lam : sorted) {
    LambdaScalingRow best{lam, 0, 0.0, INFINITY};
    for (const auto& p : parts) {
      // (T + B (N - 1)) N^{-th} / lp is unimodal in N with real minimizer th (T - B) / ((1 - th) B)
      const double B = 0.5 * lam * p.rz;
      const double nstar = th * (p.kin - B) / ((1.0 - th) * B);
      const double base = std::floor(std::min(std::max(nstar, 2.0), 1e15));
      for (double n : {base, base + 1.0}) {
        if (n < 2.0) continue;
        const double q = (p.kin + B * (n - 1.0)) * std::pow(n, -th) / p.lp;
        if (q < best.quotient) best = {lam, static_cast<int>(std::min(n, 2e9)), p.w, q};
      }
    }
    out.rows.push_back(best);
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(out.rows.size());
  for (const auto& r : out.rows) {
    const double x = std::log(r.lambda), y = std::log(r.quotient);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw FitError("lambda_scaling_experiment: degenerate fit");
  out.slope = (n * sxy - sx * sy) / den;
  out.intercept = (sy - out.slope * sx) / n;

  out.nondecreasing = true;
  out.concave = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    const double tol = 1e-12 * out.rows[i].quotient;
    if (out.rows[i].quotient < out.rows[i - 1].quotient - tol) out.nondecreasing = false;
    if (i + 1 < out.rows.size()) {
      const double s1 = (out.rows[i].quotient - out.rows[i - 1].quotient) / (out.rows[i].lambda - out.rows[i - 1].lambda);
      const double s2 =
          (out.rows[i + 1].quotient - out.rows[i].quotient) / (out.rows[i + 1].lambda - out.rows[i].lambda);
      if (s2 > s1 * (1.0 + 1e-9) + 1e-12) out.concave = false;
    }
  }
  return out;
}

/// n points geometrically spaced in [lo, hi].
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
  require(lo > 0.0 && hi > lo && n >= 2, "geometric_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  g.back() = hi;
  return g;
}

// ---------------------------------------------------------------------------
// Explicit constant for d = 3, s = 1

struct PipelineConfig {
  double C_S = 0.75 * std::pow(2.0 * pi * pi, 2.0 / 3.0);
  double C_P = 27.0 / (16.0 * std::pow(1.0 + std::cbrt(9.0), 2) * std::pow(2.0 * pi, 4.0 / 3.0));
  double a = 4.0 + std::sqrt(186.0) / 3.0;
  int grid_points = 200;
  double eps_lo = 1e-4;
  double eps_hi = 1.0 - 1e-4;
};

/// C(eps) = min{(1 - eps) C_P, C_S} / Lambda0^{2/3}, Lambda0 = a (1 + 6 C_P (1/eps - 1)).
inline double pipeline_constant(const PipelineConfig& c, double eps) {
  require(eps > 0.0 && eps < 1.0, "pipeline_constant: eps must lie in (0, 1)");
  require(c.C_S > 0.0 && c.C_P > 0.0 && c.a > 0.0, "pipeline constants must be positive");
  const double L0 = c.a * (1.0 + 6.0 * c.C_P * (1.0 / eps - 1.0));
  return std::min((1.0 - eps) * c.C_P, c.C_S) / std::pow(L0, 2.0 / 3.0);
}

struct PipelineResult {
  double C_star = 0.0;
  double eps_star = 0.0;
  double Lambda0 = 0.0;
};

inline PipelineResult explicit_constant_pipeline(const PipelineConfig& c = {}) {
  require(c.grid_points >= 3, "explicit_constant_pipeline: need at least 3 grid points");
  require(c.eps_lo > 0.0 && c.eps_hi < 1.0 && c.eps_lo < c.eps_hi, "explicit_constant_pipeline: bad eps range");
  double eps = 0.0;
  const double neg = detail::scan_minimize([&](double e) { return -pipeline_constant(c, e); }, c.eps_lo, c.eps_hi,
                                           c.grid_points, &eps);
  return {-neg, eps, c.a * (1.0 + 6.0 * c.C_P * (1.0 / eps - 1.0))};
}

// ---------------------------------------------------------------------------
// Local uncertainty on a cube

struct LocalUncertainty {
  double seminorm = 0.0;  // ||u||^2 over Q
  double l2 = 0.0;        // int_Q |u|^2
  double lp = 0.0;        // int_Q |u|^{2(1+2s/d)}
  double error = 0.0;
  double volume = 0.0;
  double s = 0.0;
  int d = 0;

  /// Smallest C > 0 for which the inequality holds for this u.
  double minimal_constant() const {
    const double th = 2.0 * s / d;
    const double A = l2 > 0.0 ? lp / std::pow(l2, th) : 0.0;
    const double B = l2 / std::pow(volume, th);
    return 2.0 * A / (seminorm + std::sqrt(seminorm * seminorm + 4.0 * A * B));
  }
};

inline LocalUncertainty local_uncertainty_terms(const TrialFunction& u, const Cube& Q, double s) {
  const int d = u.dim();
  if (Q.dim() != d) throw DimensionMismatch("local_uncertainty: dimensions differ");
  require(s > 0.0, "local_uncertainty: s must be > 0");
  LocalUncertainty t;
  t.s = s;
  t.d = d;
  t.volume = Q.volume();
  const auto h = hs_seminorm_cube(u, Q, s);
  const auto l2 = detail::cube_power_integral(u, Q, 2.0);
  const auto lp = detail::cube_power_integral(u, Q, 2.0 * (1.0 + 2.0 * s / d));
  if (!(l2.value > 0.0)) throw PreconditionError("local_uncertainty: u vanishes on the cube");
  t.seminorm = h.value;
  t.l2 = l2.value;
  t.lp = lp.value;
  t.error = h.error + l2.error + lp.error;
  return t;
}

/// ||u||^2_{H^s(Q)} >= (1/C) int_Q |u|^{2(1+2s/d)} / (int_Q |u|^2)^{2s/d} - C |Q|^{-2s/d} int_Q |u|^2.
inline InequalityReport local_uncertainty_gap(const TrialFunction& u, const Cube& Q, double s, double C) {
  require(C > 0.0, "local_uncertainty_gap: C must be > 0");
  const auto t = local_uncertainty_terms(u, Q, s);
  const double th = 2.0 * s / t.d;
  const double rhs = t.lp / (C * std::pow(t.l2, th)) - C * t.l2 / std::pow(t.volume, th);
  const double scale = std::abs(t.seminorm) + std::abs(rhs) + C * t.l2 / std::pow(t.volume, th);
  auto r = make_report("local_uncertainty", t.seminorm, rhs, t.error * (1.0 + 1.0 / C + C) + rounding_floor(scale, 8));
  return r;
}

/// Largest minimal constant over a family: the smallest C valid for all members.
inline double local_uncertainty_constant(const std::vector<TrialFunction>& family, const Cube& Q, double s) {
  require(!family.empty(), "local_uncertainty_constant: empty family");
  double c = 0.0;
  for (const auto& u : family) c = std::max(c, local_uncertainty_terms(u, Q, s).minimal_constant());
  return c;
}

/// Gaussians of widths geometrically spaced in [0.05, 2] centered in Q, plus the constant function.
inline std::vector<TrialFunction> local_uncertainty_family(const Cube& Q, int widths = 12) {
  std::vector<TrialFunction> fam;
  for (double w : geometric_grid(0.05 * Q.side(), 2.0 * Q.side(), widths))
    fam.push_back(TrialFunction::gaussian(Q.center(), w));
  fam.push_back(TrialFunction::affine(Point(static_cast<std::size_t>(Q.dim()), 0.0), 1.0));
  return fam;
}

// ---------------------------------------------------------------------------
// Assembled Lieb-Thirring bound for product states

struct AssemblyResult {
  std::string branch;  // "covering" or "few-particles"
  int N = 0;
  double lambda = 0.0;
  double s = 0.0;
  double C = 0.0;
  double Lambda = 0.0;
  double Lambda0 = 0.0;
  double a = 0.0;
  double kinetic = 0.0;      // N <u, (-Delta)^s u>
  double interaction = 0.0;  // lambda N(N-1)/2 D(|u|^2)
  double lhs = 0.0;
  double assembled = 0.0;
  double final_rhs = 0.0;
  double rho_power = 0.0;  // int rho^{1+2s/d}
  double exclusion = 0.0;  // covering functional value, covering branch only
  std::size_t leaves = 0;
  InequalityReport upper;  // lhs >= assembled
  InequalityReport lower;  // assembled >= final_rhs
  bool satisfied() const { return upper.satisfied && lower.satisfied; }
};

inline double assembly_threshold(int d, double s, double C, double lambda, double a) {
  if (!(lambda > 0.0)) return INFINITY;
  return a * (2.0 * std::pow(static_cast<double>(d), s) * C + lambda) / lambda;
}

/// Cube that holds all but a negligible part of |u|^2.
inline Cube support_cube(const TrialFunction& u) {
  if (u.kind() == TrialFunction::Kind::Affine) throw CapabilityError("support_cube: affine functions");
  const double half = u.kind() == TrialFunction::Kind::Gaussian ? 9.0 * u.width() : u.width();
  return Cube(u.center(), 2.0 * half);
}

/// Levels of the Lieb-Thirring assembly for rho = N |u|^2 with the covering
/// at threshold Lambda (k = 2, alpha = 2s/d). When the cube mass is below
/// Lambda the few-particle bound S N^{-2s/d} int rho^{1+2s/d} is used instead.
/// The final form is min{1/C, S} / Lambda0^{2s/d} int rho^{1+2s/d} in the
/// few-particle branch and the last line of the assembly otherwise.
inline AssemblyResult lt_assembly_experiment(const TrialFunction& u, int N, double lambda, double s, double Lambda,
                                             double C, std::optional<Cube> root = std::nullopt) {
  const int d = u.dim();
  detail::require_subcritical(s, d, "lt_assembly_experiment");
  require(N >= 1, "lt_assembly_experiment: N must be >= 1");
  require(lambda >= 0.0, "lt_assembly_experiment: lambda must be >= 0");
  require(C > 0.0, "lt_assembly_experiment: C must be > 0");
  require(Lambda > 0.0, "lt_assembly_experiment: Lambda must be > 0");
  const double th = 2.0 * s / d;
  const double ds = std::pow(static_cast<double>(d), s);
  const TrialFunction v = u.normalized();
  const Cube Q0 = root ? *root : support_cube(v);

  AssemblyResult r;
  r.N = N;
  r.lambda = lambda;
  r.s = s;
  r.C = C;
  r.Lambda = Lambda;
  r.a = covering_constant_a(2, d, th);
  r.Lambda0 = assembly_threshold(d, s, C, lambda, r.a);

  const auto kin = hs_fullspace_detail(v, s);
  ErrorEstimate rz;
  if (lambda > 0.0 && N > 1) rz = riesz_energy(v.density(), 2.0 * s);
  r.kinetic = N * kin.value;
  r.interaction = lambda * 0.5 * N * (N - 1.0) * rz.value;
  r.lhs = r.kinetic + r.interaction;
  const double lhs_tol = N * kin.error + lambda * 0.5 * N * (N - 1.0) * rz.error;

  const double q = 2.0 * (1.0 + th);
  const double Nq = std::pow(static_cast<double>(N), 1.0 + th);
  r.rho_power = Nq * v.lp_integral(q);

  const Density rho = v.density().scaled(N);
  const double root_mass = mass(rho, Q0);
  double tol = 0.0;
  if (root_mass >= Lambda) {
    r.branch = "covering";
    const auto part = build_covering(rho, Q0, Lambda, 2);
    r.leaves = part.leaves.size();
    r.exclusion = exclusion_functional(part, th, r.a).lhs;
    const Density up = v.power_density(q);
    Accumulator lvl, weighted;
    double scale = 0.0;
    for (const auto& leaf : part.leaves) {
      const double m = leaf.mass;
      const double w = std::pow(leaf.cube.volume(), -th);
      const double I = Nq * mass(up, leaf.cube);
      const double t = (m > 0.0 ? I / (C * std::pow(m, th)) : 0.0) - C * m * w + lambda * w * (m * m - m) / (2.0 * ds);
      lvl += t;
      weighted += w * m / (2.0 * ds);
      scale += std::abs(t);
      tol += w * leaf.error * (C + lambda * (2.0 * m + 1.0) / (2.0 * ds));
    }
    r.assembled = lvl.value();
    r.final_rhs = r.rho_power / (C * std::pow(Lambda, th)) +
                  (lambda * Lambda / r.a - 2.0 * ds * C - lambda) * weighted.value();
    tol += rounding_floor(scale + r.rho_power, part.leaves.size());
  } else {
    r.branch = "few-particles";
    const double S = sobolev_constant(d, s);
    r.assembled = S * std::pow(static_cast<double>(N), -th) * r.rho_power;
    const double L0 = std::isfinite(r.Lambda0) ? std::max(r.Lambda0, static_cast<double>(N)) : INFINITY;
    r.final_rhs = std::isfinite(L0) ? std::min(1.0 / C, S) * std::pow(L0, -th) * r.rho_power : 0.0;
    tol = rounding_floor(r.assembled, 8);
  }
  r.upper = make_report("lt_assembly_upper", r.lhs, r.assembled, lhs_tol + tol + rounding_floor(r.lhs, 8));
  r.lower = make_report("lt_assembly_lower", r.assembled, r.final_rhs, tol + rounding_floor(r.assembled, 8));
  return r;
}

struct AssemblyCampaign {
  double C = 0.0;  // empirical local uncertainty constant on the unit cube
  std::vector<AssemblyResult> runs;
  std::vector<std::string> trials;
  int passed = 0;
};

/// Seeded assembly runs at Lambda = Lambda0: N cycles through {5, 10, 20},
/// the trial alternates between Gaussians and bumps with random center and width.
inline AssemblyCampaign lt_assembly_campaign(int configs, std::uint64_t seed, int d = 3, double s = 1.0,
                                             double lambda = 1.0, unsigned workers = 0) {
  require(configs >= 1, "lt_assembly_campaign: configs must be >= 1");
  detail::require_subcritical(s, d, "lt_assembly_campaign");
  AssemblyCampaign out;
  const Cube unit = Cube::unit(d);
  out.C = local_uncertainty_constant(local_uncertainty_family(unit), unit, s);
  const double L0 = assembly_threshold(d, s, out.C, lambda, covering_constant_a(2, d, 2.0 * s / d));
  std::vector<TrialFunction> trials;
  std::vector<int> Ns;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  static const int kN[] = {5, 10, 20};
  for (int i = 0; i < configs; ++i) {
    Point c(static_cast<std::size_t>(d));
    for (auto& x : c) x = -1.0 + 2.0 * U(rng);
    const double w = 0.5 + 1.5 * U(rng);
    trials.push_back(i % 2 == 0 ? TrialFunction::gaussian(c, w) : TrialFunction::bump(c, 2.0 * w, 2.0 + U(rng)));
    Ns.push_back(kN[i % 3]);
  }
  out.runs.resize(trials.size());
  detail::parallel_for(
      trials.size(),
      [&](std::size_t i) { out.runs[i] = lt_assembly_experiment(trials[i], Ns[i], lambda, s, L0, out.C); }, workers);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    out.trials.push_back(trials[i].describe());
    out.passed += out.runs[i].satisfied();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lieb-Oxford chain for product states

struct LiebOxfordResult {
  int N = 0;
  double gamma = 0.0;
  std::size_t samples = 0;
  double max_identity_residual = 0.0;  // |g - f^2/2 + f/2 - (N/2) p (1 - p)|
  bool chain_holds = false;            // g >= f^2/2 - min{f, f^2}/2 at every sample
  double interaction = 0.0;            // N(N-1)/2 D(|u|^2)
  double direct = 0.0;                 // D(rho) / 2
  double rho_power = 0.0;              // int rho^{1+gamma/d}
  double prefactor = 0.0;              // d c_{d,gamma} |B_1|^{1+gamma/d} / (2 gamma (d - gamma))
  double M = 0.0;
  double M_min = 0.0;  // smallest M for which the final inequality holds for this state
  InequalityReport report;
};

inline LiebOxfordResult lieb_oxford_chain_check(const TrialFunction& u, int N, double gamma,
                                                const std::vector<double>& radii, const std::vector<Point>& points,
                                                double M) {
  const int d = u.dim();
  require(N >= 1, "lieb_oxford_chain_check: N must be >= 1");
  if (!(gamma > 0.0 && gamma < d)) throw InvalidParameter("lieb_oxford_chain_check: need 0 < gamma < d");
  if (radii.empty() || points.empty()) throw InvalidParameter("lieb_oxford_chain_check: empty grid");
  require(M > 0.0, "lieb_oxford_chain_check: M must be > 0");
  const TrialFunction v = u.normalized();
  const Density dens = v.density();

  LiebOxfordResult r;
  r.N = N;
  r.gamma = gamma;
  r.M = M;
  r.chain_holds = true;
  const double n = N;
  for (const auto& x : points)
    for (double R : radii) {
      const double p = std::clamp(ball_mass(dens, x, R), 0.0, 1.0);
      const double f = n * p;
      const double g = 0.5 * n * (n - 1.0) * p * p;
      const double res = (g - 0.5 * f * f + 0.5 * f) - 0.5 * n * p * (1.0 - p);
      r.max_identity_residual = std::max(r.max_identity_residual, std::abs(res));
      const double lower = 0.5 * f * f - 0.5 * std::min(f, f * f);
      if (g < lower - rounding_floor(f * f, 4)) r.chain_holds = false;
      ++r.samples;
    }

  const auto rz = riesz_energy(dens, gamma);
  r.interaction = 0.5 * n * (n - 1.0) * rz.value;
  r.direct = 0.5 * n * n * rz.value;
  r.rho_power = std::pow(n, 1.0 + gamma / d) * v.lp_integral(2.0 * (1.0 + gamma / d));
  r.prefactor = d * fdll_constant(d, gamma) * std::pow(unit_ball_volume(d), 1.0 + gamma / d) /
                (2.0 * gamma * (d - gamma));
  // interaction = direct - N D / 2, so the inequality needs prefactor M rho_power >= N D / 2
  r.M_min = 0.5 * n * rz.value / (r.prefactor * r.rho_power);
  r.report = make_report("lieb_oxford", r.interaction, r.direct - r.prefactor * M * r.rho_power,
                         0.5 * n * n * rz.error + rounding_floor(r.direct, 4));
  return r;
}

// ---------------------------------------------------------------------------
// Seeded campaigns

struct CampaignRun {
  int index = 0;
  int d = 0;
  int k = 0;
  double s = 0.0;
  double alpha = 0.0;
  double q = 0.0;
  double lambda = 0.0;
  double mass = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::size_t leaves = 0;
  std::size_t families = 0;
  bool leaves_below = false;
  bool tiling = false;
  bool center = true;  // only checked for odd k
  bool family_minimal = true;
  bool family_mass = true;
  bool family_larger = true;
  bool family_total = true;
  bool family_weak_total = true;
  InequalityReport exclusion;
  InequalityReport weak;
  std::string error;

  bool families_ok() const { return family_minimal && family_mass && family_larger && family_total && family_weak_total; }
  bool passed() const {
    return error.empty() && leaves_below && tiling && center && exclusion.satisfied && weak.satisfied && families_ok();
  }
};

struct CampaignSummary {
  std::vector<CampaignRun> runs;
  int passed = 0;
  int exclusion_ok = 0;
  int weak_ok = 0;
  int families_ok = 0;
  int center_checked = 0;
  int center_ok = 0;
  int leaves_ok = 0;
};

/// One covering run on a random Gaussian mixture in [0,1]^d. The run's
/// parameters are cycled through d in {1,2,3}, k in {2,3}, s in {1/4,1/2,1}
/// and q in {1,2}; everything else is drawn from a generator seeded by
/// (seed, index).
inline CampaignRun covering_campaign_run(std::uint64_t seed, int index) {
  CampaignRun r;
  r.index = index;
  r.d = 1 + index % 3;
  r.k = 2 + (index / 3) % 2;
  static const double kS[] = {0.25, 0.5, 1.0};
  r.s = kS[(index / 6) % 3];
  r.q = 1.0 + (index / 18) % 2;
  r.alpha = 2.0 * r.s / r.d;
  std::seed_seq seq{seed, static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double kd = std::pow(static_cast<double>(r.k), r.d);
  r.lambda = r.q * kd * (1.05 + 1.95 * U(rng));
  const double target = r.lambda * (1.5 + 38.5 * U(rng));

  const Cube Q0 = Cube::unit(r.d);
  const int comps = 1 + static_cast<int>(U(rng) * 4.0);
  std::vector<GaussianComponent> gs;
  for (int c = 0; c < comps; ++c) {
    GaussianComponent g;
    g.weight = 0.2 + U(rng);
    g.center.resize(static_cast<std::size_t>(r.d));
    for (auto& x : g.center) x = 0.1 + 0.8 * U(rng);
    g.sigma = 0.01 * std::pow(30.0, U(rng));
    gs.push_back(g);
  }
  Density rho = Density::gaussian_mixture(r.d, gs);
  rho = rho.scaled(target / mass(rho, Q0));
  try {
    const auto p = build_covering(rho, Q0, r.lambda, r.k);
    r.mass = p.nodes[0].mass.value;
    r.leaves = p.leaves.size();
    r.families = p.families.size();
    r.a = covering_constant_a(r.k, r.d, r.alpha);
    r.b = covering_constant_b(r.k, r.d, r.alpha, r.q, r.lambda).value;
    r.leaves_below = leaf_masses_below(p);
    r.tiling = std::abs(leaf_volume_sum(p) - Q0.volume()) <= 1e-9 * Q0.volume();
    if (r.k % 2 == 1) r.center = center_property(p);
    r.exclusion = exclusion_functional(p, r.alpha, r.a);
    r.weak = weak_exclusion_functional(p, r.alpha, r.q, r.b);
    const int kdi = p.branching();
    for (const auto& fc : check_families(p, r.alpha, r.a, r.q, r.b)) {
      r.family_minimal = r.family_minimal && fc.minimal_count_ok(kdi);
      r.family_mass = r.family_mass && fc.minimal_mass_ok(r.lambda);
      r.family_larger = r.family_larger && fc.larger_ok(kdi);
      r.family_total = r.family_total && fc.total.satisfied;
      r.family_weak_total = r.family_weak_total && fc.weak_total.satisfied;
    }
  } catch (const Error& e) {
    r.error = e.what();
  }
  return r;
}

inline CampaignSummary covering_campaign(int runs, std::uint64_t seed, unsigned workers = 0) {
  require(runs >= 1, "covering_campaign: runs must be >= 1");
  CampaignSummary out;
  out.runs.resize(static_cast<std::size_t>(runs));
  detail::parallel_for(
      out.runs.size(), [&](std::size_t i) { out.runs[i] = covering_campaign_run(seed, static_cast<int>(i)); },
      workers);
  for (const auto& r : out.runs) {
    out.passed += r.passed();
    out.exclusion_ok += r.error.empty() && r.exclusion.satisfied;
    out.weak_ok += r.error.empty() && r.weak.satisfied;
    out.families_ok += r.error.empty() && r.families_ok();
    out.leaves_ok += r.error.empty() && r.leaves_below;
    if (r.k % 2 == 1) {
      ++out.center_checked;
      out.center_ok += r.error.empty() && r.center;
    }
  }
  return out;
}

/// Raised-cosine step in the first coordinate: 1 below lo, 0 above hi.
inline double raised_cosine(double x, double lo, double hi) {
  if (x <= lo) return 1.0;
  if (x >= hi) return 0.0;
  return 0.5 * (1.0 + std::cos(pi * (x - lo) / (hi - lo)));
}

struct LossCampaign {
  int samples = 0;
  double max_residual = 0.0;
};

inline LossCampaign loss_identity_campaign(int samples, std::uint64_t seed) {
  require(samples >= 1, "loss_identity_campaign: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  LossCampaign out;
  out.samples = samples;
  for (int i = 0; i < samples; ++i) {
    const int d = 1 + i % 3;
    const double lo = -1.0 + U(rng), hi = lo + 0.2 + 2.0 * U(rng);
    // chi = cos(theta), eta = sin(theta) keeps chi^2 + eta^2 = 1 to rounding
    auto theta = [=](const Point& x) { return 0.5 * pi * (1.0 - raised_cosine(x[0], lo, hi)); };
    auto chi = [=](const Point& x) { return std::cos(theta(x)); };
    auto eta = [=](const Point& x) { return std::sin(theta(x)); };
    Point c(static_cast<std::size_t>(d)), x(c.size()), y(c.size());
    for (auto& v : c) v = -1.0 + 2.0 * U(rng);
    for (auto& v : x) v = -2.0 + 4.0 * U(rng);
    for (auto& v : y) v = -2.0 + 4.0 * U(rng);
    const auto u = TrialFunction::gaussian(c, 0.3 + U(rng));
    out.max_residual = std::max(out.max_residual, std::abs(loss_identity_residual(chi, eta, u, x, y)));
  }
  return out;
}

}  // namespace fraclt
