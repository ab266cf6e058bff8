#pragma once

// Command-line front end. Exit status: 0 success, 1 solver failure (or a
// failed structural check), 2 input error.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compeq/analysis.hpp"
#include "compeq/io.hpp"
#include "compeq/structure.hpp"

namespace compeq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 1;
inline constexpr int kExitInputError = 2;

namespace detail {

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open instance file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_instance(buf.str());
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_csv(const std::string& path, const CsvWriter& csv) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write csv file '" + path + "'");
  out << csv.str();
  if (!out) throw InputError("failed writing csv file '" + path + "'");
}

/// Parses "start:stop:points".
inline std::vector<double> parse_grid_spec(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos) throw InputError("grid must be start:stop:points");
  const auto start = to_double(std::string_view(spec).substr(0, a));
  const auto stop = to_double(std::string_view(spec).substr(a + 1, b - a - 1));
  const auto points = to_double(std::string_view(spec).substr(b + 1));
  if (!start || !stop || !points || *points < 1 || *points != std::floor(*points))
    throw InputError("grid must be start:stop:points with an integer point count");
  return linear_grid(*start, *stop, static_cast<std::size_t>(*points));
}

inline void flow_rows(CsvWriter& csv, const EquilibriumReport& r) {
  const auto agg = r.flow.aggregate();
  for (std::size_t g = 0; g < r.flow.groups(); ++g)
    for (std::size_t a = 0; a < r.flow.arcs(); ++a)
      csv.add_row({std::to_string(g), std::to_string(a + 1), format_number(r.flow(g, a)), format_number(agg[a]),
                   format_number(r.costs.arc_costs[a])});
}

inline CsvWriter flow_csv(const EquilibriumReport& r) {
  CsvWriter csv({"group", "arc", "flow", "aggregate", "arc_cost"});
  flow_rows(csv, r);
  return csv;
}

} // namespace detail

/// Runs the command line `args` (args[0] is the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Composite, Wardrop and Nash equilibria of parallel-arc congestion games", "compeq"};
  app.require_subcommand(1);

  std::string instance_path, csv_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("instance", instance_path, "Instance file")->required();
    sub->add_option("--csv", csv_path, "Write machine-readable columns to this file");
  };

  auto* we_cmd = app.add_subcommand("solve-we", "Wardrop equilibrium of the instance network (unit demand)");
  add_common(we_cmd);
  auto* ce_cmd = app.add_subcommand("solve-ce", "Composite equilibrium of the instance");
  add_common(ce_cmd);
  auto* threshold_cmd = app.add_subcommand("threshold", "Largest neutral single-coalition size");
  add_common(threshold_cmd);
  auto* compare_cmd = app.add_subcommand("compare", "Compare the composite equilibrium with the Wardrop equilibrium");
  add_common(compare_cmd);

  auto* scan_cmd = app.add_subcommand("scan", "Costs of the one-coalition game (1-T; T) over a grid of T");
  add_common(scan_cmd);
  std::string grid_spec;
  double grid_start = 0.0, grid_stop = 1.0;
  int grid_points = 21;
  scan_cmd->add_option("--coalition-grid", grid_spec, "start:stop:points");
  scan_cmd->add_option("--start", grid_start, "First coalition size");
  scan_cmd->add_option("--stop", grid_stop, "Last coalition size");
  scan_cmd->add_option("--points", grid_points, "Number of grid points")->check(CLI::PositiveNumber);

  auto* split_cmd = app.add_subcommand("split", "Move weight from one coalition to the individuals");
  add_common(split_cmd);
  std::size_t split_index = 1;
  double split_delta = 0.0;
  split_cmd->add_option("--coalition", split_index, "1-based coalition index")->check(CLI::PositiveNumber);
  split_cmd->add_option("--delta", split_delta, "Weight that leaves the coalition")->required();

  auto* converge_cmd = app.add_subcommand(
      "converge", "Split the individuals' weight into vanishing coalitions and track convergence to the instance CE");
  add_common(converge_cmd);
  std::string mode_name = "equal";
  std::vector<int> steps{1, 2, 4, 8, 16, 32, 64, 128};
  converge_cmd->add_option("--mode", mode_name, "equal | geometric | individuals")
      ->check(CLI::IsMember({"equal", "geometric", "individuals"}));
  converge_cmd->add_option("--steps", steps, "Comma-separated step counts")->delimiter(',');

  auto* check_cmd = app.add_subcommand("check", "Run the structural property suite on the instance");
  add_common(check_cmd);

  std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    const Instance inst = detail::load_instance(instance_path);
    const auto& n = inst.network;
    const auto& p = inst.profile;
    const auto& s = inst.settings;

    if (*we_cmd) {
      const auto we = solve_we(n, 1.0, s);
      const CompositionProfile nonatomic;
      FlowProfile f(1, n.size());
      for (std::size_t r = 0; r < n.size(); ++r) f(0, r) = we.flow[r];
      EquilibriumReport report{f, equilibrium_costs(n, nonatomic, f, s.support_epsilon), ce_gap(n, nonatomic, f), 0};
      out << emit_report(report, nonatomic);
      detail::write_csv(csv_path, detail::flow_csv(report));
    } else if (*ce_cmd) {
      const auto report = solve_ce(n, p, s);
      out << emit_report(report, p);
      detail::write_csv(csv_path, detail::flow_csv(report));
    } else if (*threshold_cmd) {
      const double t = threshold_t_tilde(n, s);
      const auto we = solve_we(n, 1.0, s);
      out << "T_tilde = " << format_number(t) << '\n';
      out << "W = " << format_number(we.cost) << '\n';
      CsvWriter csv({"T_tilde", "W"});
      csv.add_row({format_number(t), format_number(we.cost)});
      detail::write_csv(csv_path, csv);
    } else if (*compare_cmd) {
      const auto cmp = compare_ce_we(n, p, s);
      out << "induces WE: " << (cmp.induces_we ? "yes" : "no") << '\n';
      out << "W = " << format_number(cmp.we.cost) << '\n';
      CsvWriter csv({"group", "cost", "W", "delta", "induces_we"});
      const std::string induced = cmp.induces_we ? "1" : "0";
      if (cmp.individual_delta) {
        out << "W - Y^0 = " << format_number(*cmp.individual_delta) << '\n';
        csv.add_row({"0", format_number(*cmp.ce.costs.individual_avg), format_number(cmp.we.cost),
                     format_number(*cmp.individual_delta), induced});
      }
      for (std::size_t k = 0; k < cmp.coalition_deltas.size(); ++k) {
        out << "W - Y^" << (k + 1) << " = " << format_number(cmp.coalition_deltas[k]) << '\n';
        csv.add_row({std::to_string(k + 1), format_number(cmp.ce.costs.coalition_avg[k]), format_number(cmp.we.cost),
                     format_number(cmp.coalition_deltas[k]), induced});
      }
      out << "W - Y = " << format_number(cmp.social_delta) << '\n';
      csv.add_row({"social", format_number(cmp.ce.costs.social), format_number(cmp.we.cost),
                   format_number(cmp.social_delta), induced});
      if (!cmp.induces_we)
        out << "all costs below W: " << (cmp.all_deltas_exceed(0.0) ? "yes" : "no") << '\n';
      out << '\n' << emit_report(cmp.ce, p);
      detail::write_csv(csv_path, csv);
    } else if (*scan_cmd) {
      const auto grid = grid_spec.empty() ? linear_grid(grid_start, grid_stop, static_cast<std::size_t>(grid_points))
                                          : detail::parse_grid_spec(grid_spec);
      const auto scan = scan_single_coalition(n, grid, s);
      out << "T_tilde = " << format_number(scan.threshold) << '\n';
      out << "W = " << format_number(scan.wardrop_cost) << '\n';
      out << "T\tY^0\tY^1\tY\tgap\n";
      CsvWriter csv({"T", "Y0", "Y1", "Y", "gap"});
      for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<std::string> cells{format_number(grid[i]), format_number(scan.y0[i]), format_number(scan.y1[i]),
                                       format_number(scan.y[i]), format_number(scan.gap[i])};
        out << cells[0] << '\t' << cells[1] << '\t' << cells[2] << '\t' << cells[3] << '\t' << cells[4];
        if (!scan.failures[i].empty()) out << "\tFAILED: " << scan.failures[i];
        out << '\n';
        csv.add_row(std::move(cells));
      }
      detail::write_csv(csv_path, csv);
      if (!scan.ok()) return kExitSolverFailure;
    } else if (*split_cmd) {
      const auto split = split_experiment(n, p, split_index, split_delta, s);
      out << "before:\n" << emit_report(split.before, split.before_profile);
      out << "\nafter (coalition " << split_index << " is now coalition " << split.after_index << "):\n"
          << emit_report(split.after, split.after_profile);
      out << "\nc^0 before = " << format_number(split.before.costs.individual_level) << '\n';
      out << "c^0 after = " << format_number(split.after.costs.individual_level) << '\n';
      out << "individuals not better off: " << (split.individuals_not_better_off() ? "yes" : "no") << '\n';
      CsvWriter csv({"stage", "T0", "c0", "Y", "gap"});
      csv.add_row({"before", format_number(split.before_profile.individual_weight()),
                   format_number(split.before.costs.individual_level), format_number(split.before.costs.social),
                   format_number(split.before.gap)});
      csv.add_row({"after", format_number(split.after_profile.individual_weight()),
                   format_number(split.after.costs.individual_level), format_number(split.after.costs.social),
                   format_number(split.after.gap)});
      detail::write_csv(csv_path, csv);
    } else if (*converge_cmd) {
      AdmissibleSequenceSpec spec;
      spec.fixed_weights.assign(p.coalition_weights().begin(), p.coalition_weights().end());
      spec.mode = *parse_residual_mode(mode_name);
      spec.steps = steps;
      const auto table = asymptotic_experiment(n, spec, s);
      out << "n\tK_n\tdelta_n\tdistance\tfixed_cost_gap\tresidual_cost_gap\tgap\n";
      CsvWriter csv({"n", "K", "delta_n", "distance", "fixed_cost_gap", "residual_cost_gap", "gap"});
      for (const auto& row : table.rows) {
        std::vector<std::string> cells{std::to_string(row.step), std::to_string(row.coalitions),
                                       format_number(row.largest_piece), format_number(row.distance),
                                       format_number(row.fixed_cost_gap), format_number(row.residual_cost_gap),
                                       format_number(row.gap)};
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
        if (!row.failure.empty()) out << "\tFAILED: " << row.failure;
        out << '\n';
        csv.add_row(std::move(cells));
      }
      out << "monotone: " << (table.monotone() ? "yes" : "no") << '\n';
      out << "final distance = " << format_number(table.final_distance()) << '\n';
      detail::write_csv(csv_path, csv);
      if (!table.complete()) return kExitSolverFailure;
    } else if (*check_cmd) {
      const auto report = check_instance(n, p, s);
      out << "induces WE: " << (report.induces_we ? "yes" : "no") << '\n';
      CsvWriter csv({"check", "passed"});
      for (const auto& c : report.checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.passed) out << ": " << c.detail;
        out << '\n';
        csv.add_row({'"' + c.name + '"', c.passed ? "1" : "0"});
      }
      detail::write_csv(csv_path, csv);
      if (!report.passed()) return kExitSolverFailure;
    }
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolverFailure;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::domain_error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}

} // namespace compeq
