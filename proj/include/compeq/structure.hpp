#pragma once

// Structural properties every composite equilibrium must satisfy, evaluated
// on a computed equilibrium with explicit numerical slack.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "compeq/analysis.hpp"
#include "compeq/core.hpp"
#include "compeq/equilibrium.hpp"

namespace compeq {

struct StructureTolerances {
  double support = 1e-6;      ///< flow above this counts as "used"
  double unused = 1e-9;       ///< flow at or below this counts as "not used"
  double cost = 1e-9;         ///< slack on cost and marginal-cost inequalities
  double flow = 1e-8;         ///< slack on flow dominance and equal rows
  double same_weight = 1e-12; ///< weights closer than this are equal
  double gap = 1e-9;
};

struct StructuralCheck {
  std::string name;
  bool passed = true;
  std::string detail; ///< first violation, if any
};

struct StructureReport {
  bool induces_we = false;
  std::vector<StructuralCheck> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : checks) n += c.passed ? 0 : 1;
    return n;
  }
};

namespace detail {

class CheckBuilder {
public:
  explicit CheckBuilder(std::string name) { check_.name = std::move(name); }

  template <typename... Parts>
  void require(bool ok, const Parts&... parts) {
    if (ok || !check_.passed) {
      if (!ok) check_.passed = false;
      return;
    }
    check_.passed = false;
    std::ostringstream os;
    os.precision(12);
    (os << ... << parts);
    check_.detail = os.str();
  }

  StructuralCheck done() && { return std::move(check_); }

private:
  StructuralCheck check_;
};

} // namespace detail

/// Runs every structural property on a solved composite equilibrium `ce` of
/// the game (n, p), with `we` the Wardrop equilibrium of the same network.
inline StructureReport check_structure(const Network& n, const CompositionProfile& p, const EquilibriumReport& ce,
                                       const WardropResult& we, const StructureTolerances& tol = {}) {
  using detail::CheckBuilder;
  const auto& x = ce.flow;
  const auto& c = ce.costs;
  const std::size_t arcs = n.size();
  const std::size_t coalitions = p.coalitions();
  const auto agg = x.aggregate();

  StructureReport report;
  report.induces_we = induces(agg, we.flow);

  {
    CheckBuilder b("gap certificate");
    b.require(ce.gap < tol.gap && ce.gap >= -1e-10, "gap = ", ce.gap);
    report.checks.push_back(std::move(b).done());
  }
  {
    CheckBuilder b("support nesting: individuals' arcs used by every coalition");
    for (std::size_t r = 0; r < arcs; ++r)
      if (x(0, r) > tol.support)
        for (std::size_t k = 1; k <= coalitions; ++k)
          b.require(x(k, r) > tol.support / 2, "arc ", r, " coalition ", k, " flow ", x(k, r));
    report.checks.push_back(std::move(b).done());
  }
  {
    CheckBuilder b("arc-cost separation: used arcs cheaper than unused arcs");
    for (std::size_t k = 1; k <= coalitions; ++k)
      for (std::size_t r = 0; r < arcs; ++r)
        for (std::size_t s = 0; s < arcs; ++s)
          if (x(k, r) > tol.support && x(k, s) <= tol.unused)
            b.require(c.arc_costs[r] < c.arc_costs[s] + tol.cost, "coalition ", k, " arcs ", r, "/", s);
    report.checks.push_back(std::move(b).done());
  }
  if (p.individual_weight() > 0.0 && coalitions > 0) {
    CheckBuilder b("individuals' cost below every coalition marginal and average");
    for (std::size_t k = 1; k <= coalitions; ++k) {
      const double marginal = c.coalition_marginal[k - 1];
      b.require(c.individual_level <= marginal + tol.cost, "coalition ", k, " marginal ", marginal);
      if (!report.induces_we)
        b.require(c.individual_level < marginal - tol.cost, "coalition ", k, " marginal not strictly above c0");
      b.require(*c.individual_avg <= c.coalition_avg[k - 1] + tol.cost, "coalition ", k, " Y^k below Y^0");
      b.require(std::abs(*c.individual_avg - c.coalition_support_min[k - 1]) <= tol.flow, "coalition ", k,
                " cheapest used arc differs from Y^0");
    }
    report.checks.push_back(std::move(b).done());
  }
  if (coalitions > 1) {
    CheckBuilder b("dominance: larger coalitions use more arcs and send more flow");
    for (std::size_t k = 1; k <= coalitions; ++k)
      for (std::size_t l = 1; l <= coalitions; ++l) {
        if (!(p.weight(k) < p.weight(l) - tol.same_weight)) continue;
        for (std::size_t r = 0; r < arcs; ++r) {
          b.require(x(k, r) <= x(l, r) + tol.flow, "arc ", r, " coalition ", k, " > coalition ", l);
          if (x(k, r) > tol.support) b.require(x(k, r) < x(l, r), "arc ", r, " not strictly dominated");
        }
        b.require(c.coalition_marginal[k - 1] < c.coalition_marginal[l - 1] + tol.cost, "marginals ", k, "/", l);
        b.require(c.coalition_avg[k - 1] <= c.coalition_avg[l - 1] + tol.cost, "average costs ", k, "/", l);
      }
    report.checks.push_back(std::move(b).done());

    CheckBuilder e("equal weights give identical rows");
    for (std::size_t k = 1; k <= coalitions; ++k)
      for (std::size_t l = k + 1; l <= coalitions; ++l) {
        if (std::abs(p.weight(k) - p.weight(l)) > tol.same_weight) continue;
        for (std::size_t r = 0; r < arcs; ++r)
          e.require(std::abs(x(k, r) - x(l, r)) <= tol.flow, "coalitions ", k, "/", l, " arc ", r);
      }
    report.checks.push_back(std::move(e).done());
  }
  if (!report.induces_we) {
    CheckBuilder b("under/overloaded arcs");
    for (std::size_t r = 0; r < arcs; ++r) {
      if (x(0, r) > tol.support) b.require(agg[r] < we.flow[r] - tol.cost, "individuals' arc ", r, " not underloaded");
      if (agg[r] > we.flow[r] + kInducesTolerance) {
        b.require(coalitions > 0 && x(1, r) > tol.unused, "overloaded arc ", r, " unused by coalition 1");
        b.require(c.arc_costs[r] > we.cost, "overloaded arc ", r, " not above W");
      }
      if (agg[r] < we.flow[r] - kInducesTolerance)
        b.require(c.arc_costs[r] < we.cost, "underloaded arc ", r, " not below W");
    }
    report.checks.push_back(std::move(b).done());

    CheckBuilder t("composite costs below the Wardrop cost");
    if (c.individual_avg) t.require(we.cost - *c.individual_avg > tol.cost, "W - Y^0 = ", we.cost - *c.individual_avg);
    for (std::size_t k = 1; k <= coalitions; ++k)
      t.require(we.cost - c.coalition_avg[k - 1] > tol.cost, "W - Y^", k, " = ", we.cost - c.coalition_avg[k - 1]);
    t.require(we.cost - c.social > tol.cost, "W - Y = ", we.cost - c.social);
    report.checks.push_back(std::move(t).done());
  }
  return report;
}

inline StructureReport check_instance(const Network& n, const CompositionProfile& p, const SolverSettings& s = {},
                                      const StructureTolerances& tol = {}) {
  return check_structure(n, p, solve_ce(n, p, s), solve_we(n, 1.0, s), tol);
}

} // namespace compeq
