#pragma once

// Comparative statics on top of the equilibrium solvers: the single-coalition
// neutrality threshold, composite vs Wardrop comparison, coalition-size scans,
// coalition splits and sequences of games with vanishing coalitions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "compeq/core.hpp"
#include "compeq/equilibrium.hpp"

namespace compeq {

/// Per-arc tolerance of the "aggregate equals the Wardrop flow" predicate.
inline constexpr double kInducesTolerance = 1e-7;

inline bool induces(std::span<const double> aggregate, std::span<const double> wardrop,
                    double tolerance = kInducesTolerance) {
  for (std::size_t r = 0; r < aggregate.size(); ++r)
    if (std::abs(aggregate[r] - wardrop[r]) > tolerance) return false;
  return true;
}

/// Largest single-coalition weight whose composite equilibrium still
/// coincides with the Wardrop flow, clamped to [0, 1].
inline double threshold_t_tilde(const Network& n, const SolverSettings& s = {}) {
  const auto we = solve_we(n, 1.0, s);
  double inverse_slopes = 0.0;
  for (std::size_t r = 0; r < n.size(); ++r)
    if (we.flow[r] > s.support_epsilon) inverse_slopes += 1.0 / n[r].derivative_unchecked(we.flow[r]);

  double t = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n.size(); ++r) {
    const double w = we.flow[r];
    if (w > s.support_epsilon)
      t = std::min(t, w * n[r].derivative_unchecked(w) * inverse_slopes);
    else
      t = std::min(t, (n[r].value_unchecked(0.0) - we.cost) * inverse_slopes);
  }
  // w c'(w) / c'(w) on a lone active arc is 1 only up to rounding.
  if (t > 1.0 - 64 * std::numeric_limits<double>::epsilon()) return 1.0;
  return std::clamp(t, 0.0, 1.0);
}

struct Comparison {
  WardropResult we;
  EquilibriumReport ce;
  bool induces_we = false;
  std::optional<double> individual_delta; ///< W - Y^0, absent when T^0 = 0
  std::vector<double> coalition_deltas;   ///< W - Y^k
  double social_delta = 0.0;              ///< W - Y

  /// Every present delta exceeds `margin`.
  bool all_deltas_exceed(double margin) const {
    if (individual_delta && !(*individual_delta > margin)) return false;
    for (double d : coalition_deltas)
      if (!(d > margin)) return false;
    return social_delta > margin;
  }
};

inline Comparison compare_ce_we(const Network& n, const CompositionProfile& p, const SolverSettings& s = {}) {
  Comparison out;
  out.we = solve_we(n, 1.0, s);
  out.ce = solve_ce(n, p, s);
  out.induces_we = induces(out.ce.flow.aggregate(), out.we.flow);
  const auto& c = out.ce.costs;
  if (c.individual_avg) out.individual_delta = out.we.cost - *c.individual_avg;
  for (double y : c.coalition_avg) out.coalition_deltas.push_back(out.we.cost - y);
  out.social_delta = out.we.cost - c.social;
  return out;
}

struct ScanResult {
  std::vector<double> grid;
  std::vector<double> y0; ///< individuals' cost Y^0(T); c^0 at T = 1
  std::vector<double> y1; ///< coalition's average cost Y^1(T); W at T = 0
  std::vector<double> y;  ///< social cost Y(T)
  std::vector<double> gap;
  std::vector<std::string> failures; ///< empty string where the solve succeeded
  double threshold = 0.0;
  double wardrop_cost = 0.0;

  bool ok() const {
    return std::all_of(failures.begin(), failures.end(), [](const std::string& f) { return f.empty(); });
  }
};

/// Solves the one-coalition game (1 - T; T) at each grid point. T = 0 is
/// accepted and reports the Wardrop equilibrium with Y^1(0) := W.
inline ScanResult scan_single_coalition(const Network& n, const std::vector<double>& grid,
                                        const SolverSettings& s = {}) {
  require_valid(n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw InputError("scan grid values must lie in [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("scan grid must be strictly ascending");
  }
  ScanResult out;
  out.grid = grid;
  out.threshold = threshold_t_tilde(n, s);
  out.wardrop_cost = solve_we(n, 1.0, s).cost;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double t : grid) {
    try {
      const auto p = t == 0.0 ? CompositionProfile() : CompositionProfile(1.0 - t, {t});
      const auto r = solve_ce(n, p, s);
      out.y0.push_back(r.costs.individual_avg.value_or(r.costs.individual_level));
      out.y1.push_back(t == 0.0 ? out.wardrop_cost : r.costs.coalition_avg[0]);
      out.y.push_back(r.costs.social);
      out.gap.push_back(r.gap);
      out.failures.emplace_back();
    } catch (const SolverFailure& e) {
      out.y0.push_back(nan);
      out.y1.push_back(nan);
      out.y.push_back(nan);
      out.gap.push_back(e.last_gap());
      out.failures.emplace_back(e.what());
    }
  }
  return out;
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
inline std::vector<double> linear_grid(double start, double stop, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {start};
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  grid.back() = stop;
  return grid;
}

struct SplitResult {
  CompositionProfile before_profile;
  CompositionProfile after_profile;
  std::size_t after_index = 0; ///< 1-based position of the shrunken coalition after re-sorting
  EquilibriumReport before;
  EquilibriumReport after;

  double individual_level_change() const {
    return after.costs.individual_level - before.costs.individual_level;
  }
  /// c^0(before) <= c^0(after) up to `slack`.
  bool individuals_not_better_off(double slack = 1e-9) const {
    return before.costs.individual_level <= after.costs.individual_level + slack;
  }
};

/// Moves weight `delta` from coalition `l` (1-based) to the individuals and
/// solves both games. Coalitions are re-sorted by weight afterwards.
inline SplitResult split_experiment(const Network& n, const CompositionProfile& p, std::size_t l, double delta,
                                    const SolverSettings& s = {}) {
  if (l < 1 || l > p.coalitions()) throw InputError("coalition index out of range");
  if (!(delta > 0.0 && delta < p.weight(l))) throw InputError("delta must lie strictly between 0 and T^l");
  std::vector<double> weights(p.coalition_weights().begin(), p.coalition_weights().end());
  weights[l - 1] -= delta;
  auto [after_profile, order] = CompositionProfile::sorted(p.individual_weight() + delta, weights);

  SplitResult out{p, after_profile, 0, solve_ce(n, p, s), {}};
  out.after = solve_ce(n, after_profile, s);
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == l - 1) out.after_index = i + 1;
  return out;
}

enum class ResidualMode { EqualSplit, Geometric, AllIndividuals };

inline const char* to_string(ResidualMode m) {
  switch (m) {
    case ResidualMode::EqualSplit: return "equal";
    case ResidualMode::Geometric: return "geometric";
    case ResidualMode::AllIndividuals: return "individuals";
  }
  return "?";
}

inline std::optional<ResidualMode> parse_residual_mode(std::string_view s) {
  if (s == "equal") return ResidualMode::EqualSplit;
  if (s == "geometric") return ResidualMode::Geometric;
  if (s == "individuals") return ResidualMode::AllIndividuals;
  return std::nullopt;
}

/// L fixed coalitions plus a residual mass 1 - sum(fixed) that is split into
/// n vanishing pieces at step n.
struct AdmissibleSequenceSpec {
  std::vector<double> fixed_weights;
  ResidualMode mode = ResidualMode::EqualSplit;
  std::vector<int> steps;

  double residual() const {
    double sum = 0.0;
    for (double t : fixed_weights) sum += t;
    return 1.0 - sum;
  }

  void validate() const {
    double sum = 0.0;
    for (double t : fixed_weights) {
      if (!(t > 0.0)) throw InputError("fixed coalition weights must be > 0");
      sum += t;
    }
    if (!(sum < 1.0)) throw InputError("fixed coalition weights must sum to less than 1");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (steps[i] < 1) throw InputError("sequence steps must be >= 1");
      if (i > 0 && steps[i] <= steps[i - 1]) throw InputError("sequence steps must be strictly increasing");
    }
  }

  /// Residual pieces at step n. Geometric sizes use ratio 1 - 1/n, so the
  /// largest piece still vanishes as n grows.
  std::vector<double> residual_pieces(int n) const {
    const double mass = residual();
    std::vector<double> pieces;
    switch (mode) {
      case ResidualMode::AllIndividuals:
        break;
      case ResidualMode::EqualSplit:
        pieces.assign(static_cast<std::size_t>(n), mass / n);
        break;
      case ResidualMode::Geometric: {
        const double q = 1.0 - 1.0 / n;
        double norm = 0.0, term = 1.0;
        for (int i = 0; i < n; ++i, term *= q) {
          pieces.push_back(term);
          norm += term;
        }
        for (auto& v : pieces) v *= mass / norm;
        break;
      }
    }
    return pieces;
  }
};

struct ConvergenceRow {
  int step = 0;
  std::size_t coalitions = 0;       ///< K_n
  double largest_piece = 0.0;       ///< delta_n
  double distance = 0.0;            ///< sup-norm distance of the aggregated flow to the limit CE
  double fixed_cost_gap = 0.0;      ///< max_k<=L |Y^k_n - Y^k_limit|
  double residual_cost_gap = 0.0;   ///< |average cost of the aggregated remainder - Y^0_limit|
  double vanishing_cost_gap = 0.0;  ///< max over residual groups of |Y_n - Y^0_limit|
  double gap = 0.0;
  std::string failure;
};

struct ConvergenceTable {
  EquilibriumReport limit;
  std::vector<ConvergenceRow> rows;

  bool complete() const {
    return std::none_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return !r.failure.empty(); });
  }
  /// Distances non-increasing up to `slack`.
  bool monotone(double slack = 1e-6) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].distance > rows[i - 1].distance + slack) return false;
    return true;
  }
  double final_distance() const {
    return rows.empty() ? std::numeric_limits<double>::infinity() : rows.back().distance;
  }
};

inline ConvergenceTable asymptotic_experiment(const Network& n, const AdmissibleSequenceSpec& spec,
                                              const SolverSettings& s = {}) {
  spec.validate();
  const std::size_t fixed = spec.fixed_weights.size();
  const double residual = spec.residual();
  const std::size_t arcs = n.size();

  ConvergenceTable table;
  {
    auto [limit_profile, order] = CompositionProfile::sorted(residual, spec.fixed_weights);
    auto limit = solve_ce(n, limit_profile, s);
    // Reorder limit rows so row k (k >= 1) is fixed coalition k in input order.
    FlowProfile rows(fixed + 1, arcs);
    for (std::size_t r = 0; r < arcs; ++r) rows(0, r) = limit.flow(0, r);
    std::vector<double> avg(fixed);
    for (std::size_t i = 0; i < fixed; ++i) {
      for (std::size_t r = 0; r < arcs; ++r) rows(order[i] + 1, r) = limit.flow(i + 1, r);
      avg[order[i]] = limit.costs.coalition_avg[i];
    }
    limit.flow = std::move(rows);
    limit.costs.coalition_avg = std::move(avg);
    table.limit = std::move(limit);
  }
  const double limit_individual = table.limit.costs.individual_level;

  for (int step : spec.steps) {
    ConvergenceRow row;
    row.step = step;
    auto pieces = spec.residual_pieces(step);
    row.coalitions = fixed + pieces.size();
    row.largest_piece = pieces.empty() ? 0.0 : *std::max_element(pieces.begin(), pieces.end());

    std::vector<double> weights = spec.fixed_weights;
    weights.insert(weights.end(), pieces.begin(), pieces.end());
    const double individuals = spec.mode == ResidualMode::AllIndividuals ? residual : 0.0;
    try {
      auto [profile, order] = CompositionProfile::sorted(individuals, weights);
      const auto ce = solve_ce(n, profile, s);
      row.gap = ce.gap;

      std::vector<double> remainder(arcs);
      for (std::size_t r = 0; r < arcs; ++r) remainder[r] = ce.flow(0, r);
      double vanishing = 0.0;
      if (ce.costs.individual_avg) vanishing = std::abs(*ce.costs.individual_avg - limit_individual);
      for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t source = order[i];
        if (source < fixed) {
          for (std::size_t r = 0; r < arcs; ++r)
            row.distance = std::max(row.distance, std::abs(ce.flow(i + 1, r) - table.limit.flow(source + 1, r)));
          row.fixed_cost_gap = std::max(row.fixed_cost_gap,
                                        std::abs(ce.costs.coalition_avg[i] - table.limit.costs.coalition_avg[source]));
        } else {
          for (std::size_t r = 0; r < arcs; ++r) remainder[r] += ce.flow(i + 1, r);
          vanishing = std::max(vanishing, std::abs(ce.costs.coalition_avg[i] - limit_individual));
        }
      }
      double remainder_cost = 0.0;
      for (std::size_t r = 0; r < arcs; ++r) {
        row.distance = std::max(row.distance, std::abs(remainder[r] - table.limit.flow(0, r)));
        remainder_cost += remainder[r] * ce.costs.arc_costs[r];
      }
      row.residual_cost_gap = std::abs(remainder_cost / residual - limit_individual);
      row.vanishing_cost_gap = vanishing;
    } catch (const SolverFailure& e) {
      row.failure = e.what();
      row.gap = e.last_gap();
      table.rows.push_back(std::move(row));
      break;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

} // namespace compeq
