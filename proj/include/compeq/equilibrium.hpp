#pragma once

// Wardrop, best-response and composite-equilibrium solvers on parallel arcs,
// plus the variational-inequality gap that certifies a composite equilibrium.
//
// Every player subproblem reduces to "fill weight w across the arcs at a
// common level": given background loads b_r and an own-flow factor theta
// (0 for nonatomic individuals, 1 for a coalition), the load placed on arc r
// at level L is 0 when c_r(b_r) >= L and otherwise the unique root of
//   c_r(b_r + x) + theta * x * c_r'(b_r + x) = L.
// The level is found by bisection so that the loads sum to w.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "compeq/core.hpp"

namespace compeq {

struct SolverSettings {
  double level_tolerance = 1e-12;
  double gap_tolerance = 1e-9;
  int max_outer_iterations = 10000;
  double support_epsilon = 1e-9;
  /// Once the gap certificate holds, sweeps continue until no flow entry moves
  /// by more than this. Near degenerate supports the gap is quadratic in the
  /// flow error, so the certificate alone under-resolves the flow.
  double flow_tolerance = 1e-11;

  void validate() const {
    if (!(level_tolerance > 0.0)) throw InputError("level_tolerance must be > 0");
    if (!(gap_tolerance > 0.0)) throw InputError("gap_tolerance must be > 0");
    if (!(support_epsilon > 0.0)) throw InputError("support_epsilon must be > 0");
    if (!(flow_tolerance > 0.0)) throw InputError("flow_tolerance must be > 0");
    if (max_outer_iterations < 1) throw InputError("max_outer_iterations must be >= 1");
  }

  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

/// The composite-equilibrium iteration did not reach the gap tolerance.
class SolverFailure : public std::runtime_error {
public:
  SolverFailure(const std::string& what, double last_gap, int iterations)
      : std::runtime_error(what), last_gap_(last_gap), iterations_(iterations) {}
  double last_gap() const { return last_gap_; }
  int iterations() const { return iterations_; }

private:
  double last_gap_;
  int iterations_;
};

namespace detail {

/// Root of c(b + x) + theta * x * c'(b + x) = level in x >= 0, or 0 when the
/// left side already reaches the level at x = 0. The left side is increasing
/// and convex in x, so Newton started right of the root decreases
/// monotonically onto it.
inline double arc_load_at_level(const CostFunction& f, double background, double theta, double level) {
  auto h = [&](double x) {
    const double t = background + x;
    return f.value_unchecked(t) + theta * x * f.derivative_unchecked(t);
  };
  auto dh = [&](double x) {
    const double t = background + x;
    return (1.0 + theta) * f.derivative_unchecked(t) + theta * x * f.second_derivative_unchecked(t);
  };
  if (h(0.0) >= level) return 0.0;
  double x = 1.0;
  while (h(x) < level) x *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double excess = h(x) - level;
    if (excess <= 0.0) break;
    const double next = x - excess / dh(x);
    if (!(next < x)) break;
    x = std::max(next, 0.0);
  }
  return x;
}

inline double total_at_level(const Network& n, std::span<const double> background, double theta, double level,
                             std::span<double> loads) {
  double total = 0.0;
  for (std::size_t r = 0; r < n.size(); ++r) {
    loads[r] = arc_load_at_level(n[r], background[r], theta, level);
    total += loads[r];
  }
  return total;
}

/// Distributes `weight` over the arcs at a common level and writes the loads
/// into `out`. Returns the level.
inline double fill_to_level(const Network& n, std::span<const double> background, double theta, double weight,
                            double level_tolerance, std::span<double> out) {
  const std::size_t arcs = n.size();
  if (weight <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < arcs; ++r) lowest = std::min(lowest, n[r].value_unchecked(background[r]));
    return lowest;
  }
  if (arcs == 1) {
    out[0] = weight;
    const double t = background[0] + weight;
    return n[0].value_unchecked(t) + theta * weight * n[0].derivative_unchecked(t);
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t r = 0; r < arcs; ++r) {
    lo = std::min(lo, n[r].value_unchecked(background[r]));
    const double t = background[r] + weight;
    hi = std::max(hi, n[r].value_unchecked(t) + theta * weight * n[r].derivative_unchecked(t));
  }

  std::vector<double> lo_loads(arcs, 0.0), hi_loads(arcs), mid_loads(arcs);
  double lo_total = 0.0;
  double hi_total = total_at_level(n, background, theta, hi, hi_loads);
  for (int it = 0; it < 400 && hi - lo > level_tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double mid_total = total_at_level(n, background, theta, mid, mid_loads);
    if (mid_total < weight) {
      lo = mid;
      lo_total = mid_total;
      lo_loads.swap(mid_loads);
    } else {
      hi = mid;
      hi_total = mid_total;
      hi_loads.swap(mid_loads);
    }
  }

  // Interpolate between the bracketing allocations so the loads sum to weight.
  const double span = hi_total - lo_total;
  const double s = span > 0.0 ? std::clamp((weight - lo_total) / span, 0.0, 1.0) : 1.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < arcs; ++r) {
    out[r] = lo_loads[r] + s * (hi_loads[r] - lo_loads[r]);
    sum += out[r];
  }
  if (sum > 0.0)
    for (auto& v : out) v *= weight / sum;
  return lo + s * (hi - lo);
}

} // namespace detail

struct WardropResult {
  std::vector<double> flow;
  double cost = 0.0; ///< common cost W on the used arcs
};

/// Wardrop equilibrium of a nonatomic demand in (0, 1].
inline WardropResult solve_we(const Network& n, double demand, const SolverSettings& s = {}) {
  require_valid(n);
  s.validate();
  if (!(demand > 0.0 && demand <= 1.0 + kWeightTolerance)) throw InputError("demand must lie in (0, 1]");
  WardropResult result;
  result.flow.assign(n.size(), 0.0);
  const std::vector<double> empty(n.size(), 0.0);
  detail::fill_to_level(n, empty, 0.0, demand, s.level_tolerance, result.flow);
  double total = 0.0;
  for (std::size_t r = 0; r < n.size(); ++r) total += result.flow[r] * n[r].value_unchecked(result.flow[r]);
  result.cost = total / demand;
  return result;
}

/// Minimizer of sum_r x_r c_r(b_r + x_r) over x >= 0, sum x = weight.
inline std::vector<double> best_response(const Network& n, double weight, std::span<const double> others,
                                         const SolverSettings& s = {}) {
  require_valid(n);
  if (!(weight > 0.0 && weight <= 1.0 + kWeightTolerance)) throw InputError("coalition weight must lie in (0, 1]");
  if (others.size() != n.size()) throw InputError("background must have one entry per arc");
  for (double b : others)
    if (!(b >= 0.0)) throw InputError("background loads must be nonnegative");
  std::vector<double> out(n.size());
  detail::fill_to_level(n, others, 1.0, weight, s.level_tolerance, out);
  return out;
}

/// Per-arc marginal costs of group g (the per-unit cost for the individuals).
inline std::vector<double> group_marginals(const Network& n, const FlowProfile& f, std::size_t g,
                                           std::span<const double> aggregate) {
  std::vector<double> m(n.size());
  for (std::size_t r = 0; r < n.size(); ++r) {
    m[r] = n[r].value_unchecked(aggregate[r]);
    if (g > 0) m[r] += f(g, r) * n[r].derivative_unchecked(aggregate[r]);
  }
  return m;
}

/// Variational-inequality gap: the sum over groups of the group's marginal
/// cost on its own flow minus the best it could do by moving all its weight
/// to its cheapest arc. Nonnegative on feasible flows, zero exactly at the
/// composite equilibrium.
inline double ce_gap(const Network& n, const CompositionProfile& p, const FlowProfile& f) {
  if (f.arcs() != n.size()) throw InputError("flow arc count does not match network");
  f.check(p);
  const auto agg = f.aggregate();
  double gap = 0.0;
  for (std::size_t g = 0; g < p.groups(); ++g) {
    const double w = p.weight(g);
    if (w == 0.0) continue;
    const auto m = group_marginals(n, f, g, agg);
    double inner = 0.0;
    for (std::size_t r = 0; r < n.size(); ++r) inner += f(g, r) * m[r];
    gap += inner - w * *std::min_element(m.begin(), m.end());
  }
  return gap;
}

struct CostSummary {
  std::optional<double> individual_avg; ///< Y^0, absent when T^0 = 0
  double individual_level = 0.0;        ///< c^0 = min_r c_r(x_r)
  std::vector<double> coalition_avg;    ///< Y^k
  std::vector<double> coalition_marginal; ///< min_r of coalition k's marginal cost
  std::vector<double> coalition_support_min; ///< lowest per-unit cost on coalition k's support
  double social = 0.0;                  ///< Y = sum_r x_r c_r(x_r)
  std::vector<double> arc_costs;        ///< c_r(x_r)
};

inline CostSummary equilibrium_costs(const Network& n, const CompositionProfile& p, const FlowProfile& f,
                                     double support_epsilon = 1e-9) {
  const auto agg = f.aggregate();
  CostSummary out;
  out.arc_costs.resize(n.size());
  for (std::size_t r = 0; r < n.size(); ++r) {
    out.arc_costs[r] = n[r].value_unchecked(agg[r]);
    out.social += agg[r] * out.arc_costs[r];
  }
  out.individual_level = *std::min_element(out.arc_costs.begin(), out.arc_costs.end());

  auto average = [&](std::size_t g) {
    double total = 0.0;
    for (std::size_t r = 0; r < n.size(); ++r) total += f(g, r) * out.arc_costs[r];
    return total / p.weight(g);
  };
  if (p.individual_weight() > 0.0) out.individual_avg = average(0);

  for (std::size_t k = 1; k < p.groups(); ++k) {
    out.coalition_avg.push_back(average(k));
    const auto m = group_marginals(n, f, k, agg);
    out.coalition_marginal.push_back(*std::min_element(m.begin(), m.end()));
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n.size(); ++r)
      if (f(k, r) > support_epsilon) lowest = std::min(lowest, out.arc_costs[r]);
    out.coalition_support_min.push_back(lowest);
  }
  return out;
}

struct EquilibriumReport {
  FlowProfile flow;
  CostSummary costs;
  double gap = 0.0;
  int iterations = 0;

  double social_cost() const { return costs.social; }
};

/// Composite equilibrium by Gauss-Seidel best-response sweeps: the individuals
/// re-equilibrate (Wardrop) on top of the coalitions, then each coalition
/// best-responds in turn. Accepted only when the gap certificate is below
/// `gap_tolerance`; otherwise throws SolverFailure. If the gap stalls, the
/// sweeps switch to averaged (damped) updates. After the certificate holds,
/// sweeps continue until the flow is stationary to `flow_tolerance` or the
/// sweep budget runs out.
inline EquilibriumReport solve_ce(const Network& n, const CompositionProfile& p, const SolverSettings& s = {},
                                  const std::optional<FlowProfile>& initial = std::nullopt) {
  require_valid(n);
  s.validate();
  const std::size_t arcs = n.size();
  const std::size_t groups = p.groups();

  FlowProfile x(groups, arcs);
  if (p.coalitions() == 0) {
    // Only individuals: the composite equilibrium is the Wardrop flow.
    const auto we = solve_we(n, 1.0, s);
    for (std::size_t r = 0; r < arcs; ++r) x(0, r) = we.flow[r];
    EquilibriumReport report;
    report.costs = equilibrium_costs(n, p, x, s.support_epsilon);
    report.gap = ce_gap(n, p, x);
    report.flow = std::move(x);
    return report;
  }
  if (initial) {
    if (initial->arcs() != arcs) throw InputError("initial flow arc count does not match network");
    initial->check(p);
    x = *initial;
  } else {
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t r = 0; r < arcs; ++r) x(g, r) = p.weight(g) / static_cast<double>(arcs);
  }

  auto agg = x.aggregate();
  std::vector<double> background(arcs), response(arcs);
  double gap = ce_gap(n, p, x);
  double damping = 1.0;
  double window_best = gap;
  constexpr int kStallWindow = 200;

  int sweep = 0;
  double change = std::numeric_limits<double>::infinity();
  while (gap >= s.gap_tolerance || change > s.flow_tolerance) {
    if (sweep == s.max_outer_iterations) {
      if (gap < s.gap_tolerance) break;
      throw SolverFailure("composite equilibrium did not converge (gap " + std::to_string(gap) + ")", gap, sweep);
    }
    ++sweep;
    change = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      const double w = p.weight(g);
      if (w == 0.0) continue;
      for (std::size_t r = 0; r < arcs; ++r) background[r] = std::max(0.0, agg[r] - x(g, r));
      detail::fill_to_level(n, background, g == 0 ? 0.0 : 1.0, w, s.level_tolerance, response);
      for (std::size_t r = 0; r < arcs; ++r) {
        const double next = damping == 1.0 ? response[r] : (1.0 - damping) * x(g, r) + damping * response[r];
        change = std::max(change, std::abs(next - x(g, r)));
        x(g, r) = next;
        agg[r] = background[r] + next;
      }
    }
    agg = x.aggregate();
    gap = ce_gap(n, p, x);
    if (sweep % kStallWindow == 0) {
      if (gap > 0.5 * window_best && damping > 0.125) damping *= 0.5;
      window_best = std::min(window_best, gap);
    }
  }

  EquilibriumReport report;
  report.costs = equilibrium_costs(n, p, x, s.support_epsilon);
  report.flow = std::move(x);
  report.gap = gap;
  report.iterations = sweep;
  return report;
}

} // namespace compeq
