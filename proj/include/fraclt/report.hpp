#pragma once

// JSON views of results. Object keys are sorted, so equal inputs dump to equal bytes.

#include <json.hpp>

#include "covering.hpp"
#include "inequalities.hpp"
#include "seminorm.hpp"

namespace fraclt {

using Json = nlohmann::json;

inline Json to_json(const InequalityReport& r) {
  return {{"name", r.name},         {"lhs", r.lhs}, {"rhs", r.rhs}, {"tol", r.tol}, {"margin", r.margin()},
          {"satisfied", r.satisfied}};
}

inline Json to_json(const Cube& q) {
  return {{"center", q.center()}, {"side", q.side()}, {"depth", q.depth()}, {"lower", q.lower_corner()},
          {"upper", q.upper_corner()}};
}

inline Json to_json(const CoveringPartition& p) {
  Json leaves = Json::array();
  for (const auto& l : p.leaves) {
    Json j = to_json(l.cube);
    j["mass"] = l.mass;
    j["mass_error"] = l.error;
    leaves.push_back(std::move(j));
  }
  Json fams = Json::array();
  for (const auto& f : p.families)
    fams.push_back({{"members", f.members}, {"min_volume", f.min_volume}, {"seed_node", f.seed}});
  return {{"root", to_json(p.root)},   {"k", p.k},           {"lambda", p.lambda},     {"dim", p.dim()},
          {"max_depth", p.max_depth},  {"mass_order", p.mass_order}, {"node_count", p.nodes.size()},
          {"leaf_count", p.leaves.size()}, {"leaves", leaves}, {"families", fams}};
}

inline Json to_json(const FamilyCheck& f, int kd, double lambda) {
  return {{"minimal_count", f.minimal_count},
          {"minimal_mass", f.minimal_mass},
          {"minimal_mass_tol", f.minimal_mass_tol},
          {"max_larger_count", f.max_larger_count},
          {"minimal_count_ok", f.minimal_count_ok(kd)},
          {"minimal_mass_ok", f.minimal_mass_ok(lambda)},
          {"larger_ok", f.larger_ok(kd)},
          {"total", to_json(f.total)},
          {"weak_total", to_json(f.weak_total)}};
}

inline Json to_json(const QuotientResult& q) {
  return {{"name", q.name},   {"numerator", q.numerator}, {"denominator", q.denominator}, {"quotient", q.quotient},
          {"tol", q.tol},     {"params", q.params},       {"parts", q.parts}};
}

inline Json to_json(const EnergyBreakdown& e) {
  return {{"kinetic", e.kinetic}, {"hardy", e.hardy}, {"riesz", e.riesz}, {"l2", e.l2}, {"lp", e.lp}};
}

inline Json to_json(const MuRatio& m) {
  return {{"closed_form", m.closed_form}, {"grid_infimum", m.grid_infimum}, {"t_star", m.t_star},
          {"rel_diff", m.rel_diff}};
}

inline Json to_json(const PipelineResult& p) {
  return {{"C_star", p.C_star}, {"eps_star", p.eps_star}, {"Lambda0", p.Lambda0}};
}

inline Json to_json(const LambdaScaling& l) {
  Json rows = Json::array();
  for (const auto& r : l.rows)
    rows.push_back({{"lambda", r.lambda}, {"N", r.N}, {"width", r.width}, {"quotient", r.quotient}});
  return {{"d", l.d},         {"s", l.s},           {"slope", l.slope},
          {"intercept", l.intercept}, {"expected", l.expected}, {"nondecreasing", l.nondecreasing},
          {"concave", l.concave}, {"rows", rows}};
}

inline Json to_json(const AssemblyResult& a) {
  return {{"branch", a.branch},     {"N", a.N},
          {"lambda", a.lambda},     {"s", a.s},
          {"C", a.C},               {"Lambda", a.Lambda},
          {"Lambda0", a.Lambda0},   {"a", a.a},
          {"kinetic", a.kinetic},   {"interaction", a.interaction},
          {"lhs", a.lhs},           {"assembled", a.assembled},
          {"final_rhs", a.final_rhs}, {"rho_power", a.rho_power},
          {"exclusion", a.exclusion}, {"leaves", a.leaves},
          {"upper", to_json(a.upper)}, {"lower", to_json(a.lower)},
          {"satisfied", a.satisfied()}};
}

inline Json to_json(const LiebOxfordResult& r) {
  return {{"N", r.N},
          {"gamma", r.gamma},
          {"samples", r.samples},
          {"max_identity_residual", r.max_identity_residual},
          {"chain_holds", r.chain_holds},
          {"interaction", r.interaction},
          {"direct", r.direct},
          {"rho_power", r.rho_power},
          {"prefactor", r.prefactor},
          {"M", r.M},
          {"M_min", r.M_min},
          {"report", to_json(r.report)}};
}

inline Json to_json(const CampaignRun& r) {
  Json j = {{"index", r.index},
            {"d", r.d},
            {"k", r.k},
            {"s", r.s},
            {"alpha", r.alpha},
            {"q", r.q},
            {"lambda", r.lambda},
            {"mass", r.mass},
            {"a", r.a},
            {"b", r.b},
            {"leaves", r.leaves},
            {"families", r.families},
            {"leaves_below", r.leaves_below},
            {"tiling", r.tiling},
            {"families_ok", r.families_ok()},
            {"exclusion", to_json(r.exclusion)},
            {"weak", to_json(r.weak)},
            {"passed", r.passed()}};
  if (r.k % 2 == 1) j["center"] = r.center;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline Json to_json(const CampaignSummary& c) {
  Json runs = Json::array();
  for (const auto& r : c.runs) runs.push_back(to_json(r));
  return {{"runs", c.runs.size()},     {"passed", c.passed},         {"exclusion_ok", c.exclusion_ok},
          {"weak_ok", c.weak_ok},      {"families_ok", c.families_ok}, {"center_checked", c.center_checked},
          {"center_ok", c.center_ok},  {"leaves_ok", c.leaves_ok},   {"items", runs}};
}

}  // namespace fraclt
