#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "density.hpp"
#include "geometry.hpp"

namespace fraclt {

struct CoveringNode {
  Cube cube;
  ErrorEstimate mass;
  int parent = -1;
  std::vector<int> children;  // empty for leaves
  int leaf = -1;              // index into CoveringPartition::leaves
};

struct CoveringLeaf {
  Cube cube;
  double mass = 0.0;
  double error = 0.0;
  int node = -1;
};

struct FamilyGroup {
  std::vector<int> members;  // leaf indices, smallest cubes first
  double min_volume = 0.0;
  int seed = -1;  // node whose children are the smallest members
};

/// Result of the adaptive k-ary division. nodes[0] is the root; leaves are
/// listed in depth-first order with children visited lexicographically.
struct CoveringPartition {
  Cube root;
  int k = 2;
  double lambda = 0.0;
  int max_depth = 40;
  int mass_order = 12;
  std::vector<CoveringNode> nodes;
  std::vector<CoveringLeaf> leaves;
  std::vector<FamilyGroup> families;

  int dim() const { return root.dim(); }
  int branching() const {
    int n = 1;
    for (int a = 0; a < dim(); ++a) n *= k;
    return n;
  }
};

/// Bottom-up greedy grouping. Every split node whose children are all leaves
/// seeds a family with those k^d children; the family then climbs towards the
/// root collecting the leaf children of each ancestor until it reaches the
/// root or an ancestor already claimed by an earlier family.
inline std::vector<FamilyGroup> group_families(const CoveringPartition& p) {
  const auto& nodes = p.nodes;
  if (nodes.empty()) throw InternalError("group_families: empty tree");
  const std::size_t kd = static_cast<std::size_t>(p.branching());

  std::vector<int> seeds;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.children.empty()) continue;
    if (n.children.size() != kd) throw InternalError("group_families: node with wrong child count");
    bool all_leaves = true;
    for (int c : n.children) {
      if (c <= 0 || static_cast<std::size_t>(c) >= nodes.size() || nodes[static_cast<std::size_t>(c)].parent != static_cast<int>(i))
        throw InternalError("group_families: broken parent link");
      all_leaves = all_leaves && nodes[static_cast<std::size_t>(c)].children.empty();
    }
    if (all_leaves) seeds.push_back(static_cast<int>(i));
  }
  std::stable_sort(seeds.begin(), seeds.end(), [&](int a, int b) {
    return nodes[static_cast<std::size_t>(a)].cube.depth() > nodes[static_cast<std::size_t>(b)].cube.depth();
  });

  std::vector<char> claimed(nodes.size(), 0);
  std::vector<char> assigned(p.leaves.size(), 0);
  std::vector<FamilyGroup> out;
  auto take = [&](FamilyGroup& fam, int node) {
    const int leaf = nodes[static_cast<std::size_t>(node)].leaf;
    if (leaf < 0 || assigned[static_cast<std::size_t>(leaf)])
      throw InternalError("group_families: leaf missing or assigned twice");
    assigned[static_cast<std::size_t>(leaf)] = 1;
    fam.members.push_back(leaf);
  };

  for (int s : seeds) {
    FamilyGroup fam;
    fam.seed = s;
    claimed[static_cast<std::size_t>(s)] = 1;
    for (int c : nodes[static_cast<std::size_t>(s)].children) take(fam, c);
    fam.min_volume = nodes[static_cast<std::size_t>(nodes[static_cast<std::size_t>(s)].children[0])].cube.volume();
    for (int up = nodes[static_cast<std::size_t>(s)].parent; up >= 0;
         up = nodes[static_cast<std::size_t>(up)].parent) {
      if (claimed[static_cast<std::size_t>(up)]) break;
      claimed[static_cast<std::size_t>(up)] = 1;
      for (int c : nodes[static_cast<std::size_t>(up)].children)
        if (nodes[static_cast<std::size_t>(c)].children.empty()) take(fam, c);
    }
    out.push_back(std::move(fam));
  }
  for (char a : assigned)
    if (!a) throw InternalError("group_families: unassigned leaf");
  return out;
}

/// Adaptive division of Q0: a cube whose mass is >= lambda is split into k^d
/// children, otherwise it is a leaf.
inline CoveringPartition build_covering(const Density& f, const Cube& Q0, double lambda, int k,
                                        int max_depth = 40, int mass_order = 12) {
  require(lambda > 0.0 && std::isfinite(lambda), "covering threshold must be > 0");
  require(k >= 2, "covering branching k must be >= 2");
  require(max_depth >= 1, "max_depth must be >= 1");
  if (f.dim() != Q0.dim()) throw DimensionMismatch("build_covering: density and cube dimensions differ");

  CoveringPartition p;
  p.root = Q0;
  p.k = k;
  p.lambda = lambda;
  p.max_depth = max_depth;
  p.mass_order = mass_order;

  const ErrorEstimate m0 = mass_with_error(f, Q0, mass_order);
  if (m0.value < lambda)
    throw PreconditionError("build_covering: root mass " + std::to_string(m0.value) + " is below threshold " +
                            std::to_string(lambda));
  p.nodes.push_back({Q0, m0, -1, {}, -1});

  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const auto uid = static_cast<std::size_t>(id);
    if (p.nodes[uid].mass.value < lambda) {
      p.nodes[uid].leaf = static_cast<int>(p.leaves.size());
      p.leaves.push_back({p.nodes[uid].cube, p.nodes[uid].mass.value, p.nodes[uid].mass.error, id});
      continue;
    }
    if (p.nodes[uid].cube.depth() >= max_depth)
      throw NonTerminationError("build_covering: depth limit reached with mass " +
                                    std::to_string(p.nodes[uid].mass.value) + " >= threshold",
                                p.nodes[uid].cube.describe());
    const auto kids = subdivide(p.nodes[uid].cube, k);
    std::vector<int> ids;
    ids.reserve(kids.size());
    for (const auto& c : kids) {
      ids.push_back(static_cast<int>(p.nodes.size()));
      p.nodes.push_back({c, mass_with_error(f, c, mass_order), id, {}, -1});
    }
    p.nodes[uid].children = ids;
    for (auto it = ids.rbegin(); it != ids.rend(); ++it) stack.push_back(*it);
  }
  p.families = group_families(p);
  return p;
}

// ---------------------------------------------------------------------------
// Constants

inline double covering_constant_a(int k, int d, double alpha) {
  require(k >= 2, "covering_constant_a: k must be >= 2");
  require(d >= 1, "covering_constant_a: d must be >= 1");
  require(alpha > 0.0, "covering_constant_a: alpha must be > 0");
  const double kd = std::pow(static_cast<double>(k), d);
  const double kda = std::pow(static_cast<double>(k), d * alpha);
  if (!std::isfinite(kda)) return kd;
  return 0.5 * kd * (1.0 + std::sqrt(1.0 + (1.0 - 1.0 / kd) / (kda - 1.0)));
}

struct WeakConstant {
  double value = 0.0;
  bool positive = false;  // false flags lambda <= q k^d
};

inline WeakConstant covering_constant_b(int k, int d, double alpha, double q, double lambda) {
  require(k >= 2, "covering_constant_b: k must be >= 2");
  require(d >= 1, "covering_constant_b: d must be >= 1");
  require(alpha > 0.0, "covering_constant_b: alpha must be > 0");
  require(q >= 0.0, "covering_constant_b: q must be >= 0");
  require(lambda > 0.0, "covering_constant_b: lambda must be > 0");
  const double kd = std::pow(static_cast<double>(k), d);
  const double kda = std::pow(static_cast<double>(k), d * alpha);
  const double ratio = std::isfinite(kda) ? (kda - 1.0) / (kda + kd - 2.0) : 1.0;
  const double b = (1.0 - q * kd / lambda) * ratio;
  return {b, b > 0.0};
}

// ---------------------------------------------------------------------------
// Functionals over leaves

namespace detail {

template <class Term>
InequalityReport leaf_sum(std::string name, const std::vector<CoveringLeaf>& leaves, double alpha, Term term) {
  Accumulator sum;
  double tol = 0.0, scale = 0.0;
  for (const auto& q : leaves) {
    const double w = std::pow(q.cube.volume(), -alpha);
    double slope = 0.0;
    const double t = w * term(q.mass, slope);
    sum += t;
    scale += std::abs(t);
    tol += w * std::abs(slope) * q.error;
  }
  tol += rounding_floor(scale, leaves.size());
  return make_report(std::move(name), sum.value(), 0.0, tol);
}

}  // namespace detail

/// sum_Q |Q|^{-alpha} [ m_Q^2 - (lambda/a) m_Q ] >= 0.
inline InequalityReport exclusion_functional(const std::vector<CoveringLeaf>& leaves, double lambda, double alpha,
                                             double a) {
  require(alpha > 0.0 && a > 0.0, "exclusion_functional: alpha and a must be > 0");
  const double c = lambda / a;
  return detail::leaf_sum("exclusion", leaves, alpha, [&](double m, double& slope) {
    slope = 2.0 * m - c;
    return m * m - c * m;
  });
}

inline InequalityReport exclusion_functional(const CoveringPartition& p, double alpha, double a) {
  return exclusion_functional(p.leaves, p.lambda, alpha, a);
}

/// sum_Q |Q|^{-alpha} ( [m_Q - q]_+ - b m_Q ) >= 0.
inline InequalityReport weak_exclusion_functional(const std::vector<CoveringLeaf>& leaves, double alpha, double q,
                                                  double b) {
  require(alpha > 0.0, "weak_exclusion_functional: alpha must be > 0");
  require(q >= 0.0, "weak_exclusion_functional: q must be >= 0");
  return detail::leaf_sum("weak_exclusion", leaves, alpha, [&](double m, double& slope) {
    slope = (m > q ? 1.0 : 0.0) - b;
    return std::max(m - q, 0.0) - b * m;
  });
}

inline InequalityReport weak_exclusion_functional(const CoveringPartition& p, double alpha, double q, double b) {
  return weak_exclusion_functional(p.leaves, alpha, q, b);
}

/// sum_Q [m_Q^2 - m_Q]_+ / (2 d^s |Q|^{2s/d}).
inline double local_exclusion_rhs(const std::vector<CoveringLeaf>& leaves, double s, int d) {
  require(s > 0.0, "local_exclusion_rhs: s must be > 0");
  require(d >= 1, "local_exclusion_rhs: d must be >= 1");
  Accumulator sum;
  const double pref = 1.0 / (2.0 * std::pow(static_cast<double>(d), s));
  for (const auto& q : leaves) {
    const double m = q.mass;
    sum += pref * std::pow(q.cube.volume(), -2.0 * s / d) * std::max(m * m - m, 0.0);
  }
  return sum.value();
}

inline double local_exclusion_rhs(const CoveringPartition& p, double s) {
  return local_exclusion_rhs(p.leaves, s, p.dim());
}

// ---------------------------------------------------------------------------
// Invariant checks

struct FamilyCheck {
  int minimal_count = 0;
  double minimal_mass = 0.0;
  double minimal_mass_tol = 0.0;
  int max_larger_count = 0;
  InequalityReport total;        // exclusion functional restricted to the family
  InequalityReport weak_total;   // weak form, filled when requested

  bool minimal_count_ok(int kd) const { return minimal_count == kd; }
  bool minimal_mass_ok(double lambda) const { return minimal_mass >= lambda - minimal_mass_tol; }
  bool larger_ok(int kd) const { return max_larger_count <= kd - 1; }
};

inline std::vector<FamilyCheck> check_families(const CoveringPartition& p, double alpha, double a,
                                               double q = 0.0, double b = 0.0) {
  const int kd = p.branching();
  std::vector<FamilyCheck> out;
  out.reserve(p.families.size());
  for (const auto& fam : p.families) {
    FamilyCheck fc;
    std::vector<CoveringLeaf> members;
    for (int i : fam.members) members.push_back(p.leaves[static_cast<std::size_t>(i)]);
    std::vector<int> counts;  // by depth offset from the smallest members
    int dmax = 0;
    for (const auto& m : members) dmax = std::max(dmax, m.cube.depth());
    Accumulator mm;
    double err = 0.0;
    for (const auto& m : members) {
      const auto off = static_cast<std::size_t>(dmax - m.cube.depth());
      if (counts.size() <= off) counts.resize(off + 1, 0);
      ++counts[off];
      if (off == 0) {
        mm += m.mass;
        err += m.error;
      }
    }
    fc.minimal_count = counts.empty() ? 0 : counts[0];
    fc.minimal_mass = mm.value();
    fc.minimal_mass_tol = err + rounding_floor(std::abs(fc.minimal_mass), static_cast<std::size_t>(kd));
    for (std::size_t j = 1; j < counts.size(); ++j) fc.max_larger_count = std::max(fc.max_larger_count, counts[j]);
    fc.total = exclusion_functional(members, p.lambda, alpha, a);
    fc.total.name = "family_exclusion";
    fc.weak_total = weak_exclusion_functional(members, alpha, q, b);
    fc.weak_total.name = "family_weak_exclusion";
    out.push_back(std::move(fc));
  }
  return out;
}

/// Every leaf mass plus its quadrature error is strictly below the threshold.
inline bool leaf_masses_below(const CoveringPartition& p) {
  for (const auto& q : p.leaves)
    if (!(q.mass + q.error < p.lambda)) return false;
  return true;
}

inline double leaf_volume_sum(const CoveringPartition& p) {
  Accumulator v;
  for (const auto& q : p.leaves) v += q.cube.volume();
  return v.value();
}

/// For odd k: exactly one leaf is centered at the root center and every other
/// leaf keeps distance >= side/2 from it.
inline bool center_property(const CoveringPartition& p) {
  require(p.k % 2 == 1, "center_property: only defined for odd k");
  int centered = 0;
  for (const auto& q : p.leaves) {
    if (shares_root_center(q.cube))
      ++centered;
    else if (!far_from_root_center(q.cube, p.root.center()))
      return false;
  }
  return centered == 1;
}

}  // namespace fraclt
