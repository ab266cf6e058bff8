#pragma once

// Random instance generators and solver-independent oracles shared by the
// unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "compeq/core.hpp"

namespace compeq::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Polynomial cost of degree 1..max_degree with coefficients in [lo, hi].
inline CostFunction random_cost(Rng& rng, int max_degree = 3, double lo = 0.1, double hi = 10.0) {
  const int degree = uniform_int(rng, 1, max_degree);
  std::vector<double> a(static_cast<std::size_t>(degree) + 1);
  for (auto& v : a) v = uniform(rng, lo, hi);
  return CostFunction(std::move(a));
}

inline Network random_network(Rng& rng, int max_arcs, int min_arcs = 1) {
  const int arcs = uniform_int(rng, min_arcs, max_arcs);
  std::vector<CostFunction> out;
  for (int r = 0; r < arcs; ++r) out.push_back(random_cost(rng));
  return Network(std::move(out));
}

/// Random split of the unit demand. With `allow_ties`, some coalitions copy
/// another's weight so equal-weight behaviour gets exercised.
inline CompositionProfile random_profile(Rng& rng, int max_coalitions, bool with_individuals = true,
                                         bool allow_ties = true) {
  const int k = uniform_int(rng, 0, max_coalitions);
  if (k == 0) return CompositionProfile();
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> raw(static_cast<std::size_t>(k) + 1);
  for (auto& v : raw) v = 0.05 + gamma(rng);
  if (!with_individuals) raw[0] = 0.0;
  if (allow_ties && k >= 2 && uniform(rng, 0.0, 1.0) < 0.3) raw[2] = raw[1];
  double total = 0.0;
  for (double v : raw) total += v;
  std::vector<double> coalitions;
  for (std::size_t i = 1; i < raw.size(); ++i) coalitions.push_back(raw[i] / total);
  std::sort(coalitions.begin(), coalitions.end(), std::greater<>());
  double rest = 1.0;
  for (double t : coalitions) rest -= t;
  return CompositionProfile(with_individuals ? rest : 0.0, std::move(coalitions));
}

/// Uniformly random feasible flow (each row a scaled Dirichlet(1) draw).
inline FlowProfile random_flow(Rng& rng, const CompositionProfile& p, std::size_t arcs) {
  FlowProfile f(p.groups(), arcs);
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t g = 0; g < p.groups(); ++g) {
    std::vector<double> e(arcs);
    double sum = 0.0;
    for (auto& v : e) sum += (v = expo(rng));
    for (std::size_t r = 0; r < arcs; ++r) f(g, r) = p.weight(g) * e[r] / sum;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Oracles. None of these call the library's solvers.

/// Integral of c from 0 to x (the Beckmann potential term of one arc).
inline double cost_integral(const CostFunction& f, double x) {
  double acc = 0.0;
  const auto a = f.coefficients();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::pow(x, static_cast<double>(i + 1)) / (i + 1);
  return acc;
}

/// Minimizer over [lo, hi] of a unimodal scalar function: fine grid scan,
/// then golden-section refinement around the best grid point.
inline double scalar_minimize(const std::function<double(double)>& f, double lo, double hi, int grid = 20000) {
  double best_x = lo, best = f(lo);
  for (int i = 1; i <= grid; ++i) {
    const double x = lo + (hi - lo) * i / grid;
    const double v = f(x);
    if (v < best) best = v, best_x = x;
  }
  double a = std::max(lo, best_x - (hi - lo) / grid), b = std::min(hi, best_x + (hi - lo) / grid);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (f(c) < f(d)) b = d;
    else a = c;
  }
  return 0.5 * (a + b);
}

/// Wardrop flow of a two-arc network by minimizing the Beckmann potential.
inline std::vector<double> beckmann_two_arc(const Network& n, double demand) {
  const double x = scalar_minimize(
      [&](double v) { return cost_integral(n[0], v) + cost_integral(n[1], demand - v); }, 0.0, demand);
  return {x, demand - x};
}

/// Exact VI gap by enumerating every vertex of the product of simplices:
/// <F(x), x> - min over vertices v of <F(x), v>, with F the stacked
/// per-unit costs (individuals) and marginal costs (coalitions).
inline double vertex_enumeration_gap(const Network& n, const CompositionProfile& p, const FlowProfile& x) {
  const std::size_t arcs = n.size();
  const std::size_t groups = p.groups();
  const auto agg = x.aggregate();
  std::vector<std::vector<double>> field(groups, std::vector<double>(arcs));
  double at_x = 0.0;
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t r = 0; r < arcs; ++r) {
      field[g][r] = n[r].value_unchecked(agg[r]) + (g > 0 ? x(g, r) * n[r].derivative_unchecked(agg[r]) : 0.0);
      at_x += field[g][r] * x(g, r);
    }
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> choice(groups, 0);
  while (true) {
    double v = 0.0;
    for (std::size_t g = 0; g < groups; ++g) v += p.weight(g) * field[g][choice[g]];
    best = std::min(best, v);
    std::size_t g = 0;
    while (g < groups && ++choice[g] == arcs) choice[g++] = 0;
    if (g == groups) break;
  }
  return at_x - best;
}

/// Marginal-cost equilibrium conditions, checked arc by arc: every arc a
/// group uses (flow > support) is within `tolerance` of that group's
/// cheapest arc.
inline bool marginal_conditions_hold(const Network& n, const CompositionProfile& p, const FlowProfile& x,
                                     double tolerance, double support = 1e-9) {
  const auto agg = x.aggregate();
  for (std::size_t g = 0; g < p.groups(); ++g) {
    std::vector<double> m(n.size());
    for (std::size_t r = 0; r < n.size(); ++r)
      m[r] = n[r].value_unchecked(agg[r]) + (g > 0 ? x(g, r) * n[r].derivative_unchecked(agg[r]) : 0.0);
    const double lowest = *std::min_element(m.begin(), m.end());
    for (std::size_t r = 0; r < n.size(); ++r)
      if (x(g, r) > support && m[r] > lowest + tolerance) return false;
  }
  return true;
}

/// Coalition cost sum_r x_r c_r(b_r + x_r), evaluated directly.
inline double coalition_objective(const Network& n, const std::vector<double>& own, const std::vector<double>& others) {
  double u = 0.0;
  for (std::size_t r = 0; r < n.size(); ++r) u += own[r] * n[r].value_unchecked(own[r] + others[r]);
  return u;
}

} // namespace compeq::testing
