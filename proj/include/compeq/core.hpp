#pragma once

// Domain types for congestion games on two-terminal parallel-arc networks:
// polynomial arc costs, the network, the composition of the unit demand into
// individuals and coalitions, and per-group flow tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace compeq {

/// Thrown when caller-supplied data violates a precondition or invariant.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kWeightTolerance = 1e-12;
inline constexpr double kFlowTolerance = 1e-10;

/// Per-unit arc cost c(x) = sum_i a_i x^i, coefficients stored low degree first.
class CostFunction {
public:
  CostFunction() = default;
  explicit CostFunction(std::vector<double> coefficients)
      : coefficients_(std::move(coefficients)) {}
  CostFunction(std::initializer_list<double> coefficients)
      : coefficients_(coefficients) {}

  std::span<const double> coefficients() const { return coefficients_; }
  std::size_t degree() const {
    return coefficients_.empty() ? 0 : coefficients_.size() - 1;
  }

  /// Horner evaluation with no domain check; callers validate the load.
  double value_unchecked(double x) const {
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it)
      acc = acc * x + *it;
    return acc;
  }

  double derivative_unchecked(double x) const {
    double acc = 0.0;
    for (std::size_t i = coefficients_.size(); i-- > 1;)
      acc = acc * x + static_cast<double>(i) * coefficients_[i];
    return acc;
  }

  double second_derivative_unchecked(double x) const {
    double acc = 0.0;
    for (std::size_t i = coefficients_.size(); i-- > 2;)
      acc = acc * x + static_cast<double>(i * (i - 1)) * coefficients_[i];
    return acc;
  }

  friend bool operator==(const CostFunction&, const CostFunction&) = default;

private:
  std::vector<double> coefficients_;
};

inline void require_load(double x) {
  if (!(x >= 0.0)) throw std::domain_error("cost evaluated at negative load " + std::to_string(x));
}

inline double eval_cost(const CostFunction& f, double x) {
  require_load(x);
  return f.value_unchecked(x);
}

inline double eval_cost_derivative(const CostFunction& f, double x) {
  require_load(x);
  return f.derivative_unchecked(x);
}

/// Coalition marginal cost on an arc: c(total) + own * c'(total).
inline double marginal_cost(const CostFunction& f, double own, double total) {
  if (!(own >= 0.0) || own > total)
    throw InputError("marginal_cost requires 0 <= own <= total");
  return f.value_unchecked(total) + own * f.derivative_unchecked(total);
}

struct Violation {
  std::size_t arc;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += "arc " + std::to_string(v.arc) + ": " + v.message;
    }
    return out;
  }
};

/// Checks the polynomial form of the standing cost assumption: nonnegative
/// coefficients, a positive linear term, degree at least one.
inline std::vector<std::string> validate_cost(const CostFunction& f) {
  std::vector<std::string> problems;
  const auto a = f.coefficients();
  if (a.size() < 2) problems.emplace_back("degree must be at least 1");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i])) {
      problems.emplace_back("non-finite coefficient a_" + std::to_string(i));
    } else if (a[i] < 0.0) {
      problems.emplace_back("negative coefficient a_" + std::to_string(i));
    }
  }
  if (a.size() < 2 || !(a[1] > 0.0)) problems.emplace_back("not strictly increasing (a_1 must be > 0)");
  return problems;
}

/// Ordered parallel arcs between the single origin and destination.
class Network {
public:
  Network() = default;
  explicit Network(std::vector<CostFunction> arcs) : arcs_(std::move(arcs)) {}
  Network(std::initializer_list<CostFunction> arcs) : arcs_(arcs) {}

  std::size_t size() const { return arcs_.size(); }
  const CostFunction& operator[](std::size_t r) const { return arcs_[r]; }
  std::span<const CostFunction> arcs() const { return arcs_; }

  friend bool operator==(const Network&, const Network&) = default;

private:
  std::vector<CostFunction> arcs_;
};

inline ValidationReport validate_network(const Network& n) {
  ValidationReport report;
  if (n.size() == 0) report.violations.push_back({0, "network has no arcs"});
  for (std::size_t r = 0; r < n.size(); ++r)
    for (auto& msg : validate_cost(n[r])) report.violations.push_back({r, std::move(msg)});
  return report;
}

inline void require_valid(const Network& n) {
  auto report = validate_network(n);
  if (!report.valid()) throw InputError("invalid network: " + report.summary());
}

/// Split of the unit demand into individuals (T^0) and coalitions T^1 >= ... >= T^K.
class CompositionProfile {
public:
  CompositionProfile() : individual_weight_(1.0) {}
  CompositionProfile(double individual_weight, std::vector<double> coalition_weights)
      : individual_weight_(individual_weight), coalition_weights_(std::move(coalition_weights)) {
    if (!(individual_weight_ >= 0.0 && individual_weight_ <= 1.0))
      throw InputError("individual weight must lie in [0, 1]");
    double total = individual_weight_;
    for (std::size_t k = 0; k < coalition_weights_.size(); ++k) {
      const double t = coalition_weights_[k];
      if (!(t > 0.0 && t <= 1.0))
        throw InputError("coalition weight " + std::to_string(k + 1) + " must lie in (0, 1]");
      if (k > 0 && t > coalition_weights_[k - 1])
        throw InputError("coalition weights must be non-increasing");
      total += t;
    }
    if (std::abs(total - 1.0) > kWeightTolerance)
      throw InputError("profile weights must sum to 1");
  }

  /// Builds a profile from unordered coalition weights. `order[i]` is the
  /// input position of the coalition placed at sorted index i (0-based).
  static std::pair<CompositionProfile, std::vector<std::size_t>> sorted(
      double individual_weight, const std::vector<double>& weights) {
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    std::vector<double> sorted_weights;
    sorted_weights.reserve(weights.size());
    for (auto i : order) sorted_weights.push_back(weights[i]);
    return {CompositionProfile(individual_weight, std::move(sorted_weights)), std::move(order)};
  }

  double individual_weight() const { return individual_weight_; }
  std::span<const double> coalition_weights() const { return coalition_weights_; }
  std::size_t coalitions() const { return coalition_weights_.size(); }
  std::size_t groups() const { return coalition_weights_.size() + 1; }

  /// Weight of group g: 0 is the individuals, g >= 1 is coalition g.
  double weight(std::size_t group) const {
    return group == 0 ? individual_weight_ : coalition_weights_[group - 1];
  }

  friend bool operator==(const CompositionProfile&, const CompositionProfile&) = default;

private:
  double individual_weight_;
  std::vector<double> coalition_weights_;
};

/// (1+K) x R table of nonnegative flows; row 0 belongs to the individuals.
class FlowProfile {
public:
  FlowProfile() = default;
  FlowProfile(std::size_t groups, std::size_t arcs) : groups_(groups), arcs_(arcs), data_(groups * arcs, 0.0) {}

  /// Checked construction: nonnegative entries, row sums matching the profile.
  FlowProfile(const CompositionProfile& p, std::vector<std::vector<double>> rows) {
    if (rows.size() != p.groups()) throw InputError("flow must have one row per group");
    groups_ = rows.size();
    arcs_ = rows.front().size();
    data_.reserve(groups_ * arcs_);
    for (std::size_t g = 0; g < groups_; ++g) {
      if (rows[g].size() != arcs_) throw InputError("flow rows must have equal length");
      data_.insert(data_.end(), rows[g].begin(), rows[g].end());
    }
    check(p);
  }

  std::size_t groups() const { return groups_; }
  std::size_t arcs() const { return arcs_; }

  std::span<const double> row(std::size_t g) const { return {data_.data() + g * arcs_, arcs_}; }
  std::span<double> row(std::size_t g) { return {data_.data() + g * arcs_, arcs_}; }
  double operator()(std::size_t g, std::size_t r) const { return data_[g * arcs_ + r]; }
  double& operator()(std::size_t g, std::size_t r) { return data_[g * arcs_ + r]; }

  std::vector<double> aggregate() const {
    std::vector<double> total(arcs_, 0.0);
    for (std::size_t g = 0; g < groups_; ++g)
      for (std::size_t r = 0; r < arcs_; ++r) total[r] += (*this)(g, r);
    return total;
  }

  /// Throws InputError if the table is not a feasible flow for `p`.
  void check(const CompositionProfile& p) const {
    if (groups_ != p.groups()) throw InputError("flow group count does not match profile");
    for (std::size_t g = 0; g < groups_; ++g) {
      double sum = 0.0;
      for (double v : row(g)) {
        if (!(v >= 0.0)) throw InputError("flow entries must be nonnegative");
        sum += v;
      }
      if (std::abs(sum - p.weight(g)) > kFlowTolerance)
        throw InputError("flow row " + std::to_string(g) + " does not sum to its weight");
    }
    for (double x : aggregate())
      if (x > 1.0 + kFlowTolerance) throw InputError("aggregate arc flow exceeds unit demand");
  }

  friend bool operator==(const FlowProfile&, const FlowProfile&) = default;

private:
  std::size_t groups_ = 0;
  std::size_t arcs_ = 0;
  std::vector<double> data_;
};

} // namespace compeq
