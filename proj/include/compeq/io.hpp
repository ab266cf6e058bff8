#pragma once

// Instance files, text reports and CSV output.
//
// Instance format (see docs/instance-format.md):
//
//   # comment
//   [arcs]
//   arc = 10 1          # c(x) = 10 + x, coefficients low degree first
//   arc = 1 10
//   [profile]
//   individuals = 0.9
//   coalitions = 0.1    # non-increasing, may be empty
//   [settings]          # optional
//   gap_tolerance = 1e-9

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "compeq/core.hpp"
#include "compeq/equilibrium.hpp"

namespace compeq {

/// Positioned parse failure: `line` is 1-based (0 when the whole file is at
/// fault), `field` a dotted path such as "profile.coalitions".
class ParseError : public InputError {
public:
  ParseError(std::size_t line, std::string field, const std::string& message)
      : InputError(format(line, field, message)), line_(line), field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

private:
  static std::string format(std::size_t line, const std::string& field, const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + message;
  }

  std::size_t line_;
  std::string field_;
};

struct Instance {
  Network network;
  CompositionProfile profile;
  SolverSettings settings;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Shortest form with `digits` significant digits, '.' as decimal point.
inline std::string format_number(double v, int digits = 12) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, digits);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

/// Shortest representation that parses back to the same double.
inline std::string format_exact(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> to_double(std::string_view token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::vector<double> to_numbers(std::string_view list, std::size_t line, const std::string& field) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < list.size()) {
    const auto start = list.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    auto end = list.find_first_of(" \t", start);
    if (end == std::string_view::npos) end = list.size();
    const auto token = list.substr(start, end - start);
    const auto v = to_double(token);
    if (!v) throw ParseError(line, field, "malformed number '" + std::string(token) + "'");
    out.push_back(*v);
    pos = end;
  }
  return out;
}

} // namespace detail

inline Instance parse_instance(std::string_view text) {
  enum class Section { None, Arcs, Profile, Settings };
  Section section = Section::None;
  std::array<bool, 4> seen{};

  std::vector<CostFunction> arcs;
  std::optional<double> individuals;
  std::optional<std::vector<double>> coalitions;
  std::size_t profile_line = 0;
  SolverSettings settings;
  std::vector<std::string> settings_seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "", "malformed section header");
      const auto name = detail::trim(line.substr(1, line.size() - 2));
      Section next;
      if (name == "arcs") next = Section::Arcs;
      else if (name == "profile") next = Section::Profile;
      else if (name == "settings") next = Section::Settings;
      else throw ParseError(line_no, std::string(name), "unknown section");
      if (seen[static_cast<int>(next)]) throw ParseError(line_no, std::string(name), "duplicate section");
      if (static_cast<int>(next) < static_cast<int>(section))
        throw ParseError(line_no, std::string(name), "sections must appear as [arcs], [profile], [settings]");
      seen[static_cast<int>(next)] = true;
      section = next;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "", "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const auto value = detail::trim(line.substr(eq + 1));

    switch (section) {
      case Section::None:
        throw ParseError(line_no, key, "field outside of a section");
      case Section::Arcs: {
        const std::string field = "arcs[" + std::to_string(arcs.size()) + "]";
        if (key != "arc") throw ParseError(line_no, "arcs." + key, "unknown field");
        CostFunction f(detail::to_numbers(value, line_no, field));
        const auto problems = validate_cost(f);
        if (!problems.empty()) throw ParseError(line_no, field, problems.front());
        arcs.push_back(std::move(f));
        break;
      }
      case Section::Profile: {
        profile_line = profile_line == 0 ? line_no : profile_line;
        if (key == "individuals") {
          if (individuals) throw ParseError(line_no, "profile.individuals", "duplicate field");
          const auto v = detail::to_double(value);
          if (!v) throw ParseError(line_no, "profile.individuals", "malformed number '" + std::string(value) + "'");
          individuals = *v;
        } else if (key == "coalitions") {
          if (coalitions) throw ParseError(line_no, "profile.coalitions", "duplicate field");
          coalitions = detail::to_numbers(value, line_no, "profile.coalitions");
        } else {
          throw ParseError(line_no, "profile." + key, "unknown field");
        }
        break;
      }
      case Section::Settings: {
        const std::string field = "settings." + key;
        for (const auto& k : settings_seen)
          if (k == key) throw ParseError(line_no, field, "duplicate field");
        settings_seen.push_back(key);
        const auto v = detail::to_double(value);
        if (!v) throw ParseError(line_no, field, "malformed number '" + std::string(value) + "'");
        if (key == "level_tolerance") settings.level_tolerance = *v;
        else if (key == "gap_tolerance") settings.gap_tolerance = *v;
        else if (key == "support_epsilon") settings.support_epsilon = *v;
        else if (key == "flow_tolerance") settings.flow_tolerance = *v;
        else if (key == "max_outer_iterations") {
          if (*v != std::floor(*v) || *v < 1 || *v > 1e9) throw ParseError(line_no, field, "must be a positive integer");
          settings.max_outer_iterations = static_cast<int>(*v);
        } else {
          throw ParseError(line_no, field, "unknown field");
        }
        try {
          settings.validate();
        } catch (const InputError& e) {
          throw ParseError(line_no, field, e.what());
        }
        break;
      }
    }
  }

  if (arcs.empty()) throw ParseError(0, "arcs", "at least one arc is required");
  if (!individuals) throw ParseError(profile_line, "profile.individuals", "missing field");
  if (!coalitions) coalitions.emplace();
  Instance out{Network(std::move(arcs)), CompositionProfile(), settings};
  try {
    out.profile = CompositionProfile(*individuals, std::move(*coalitions));
  } catch (const InputError& e) {
    throw ParseError(profile_line, "profile", e.what());
  }
  return out;
}

/// Serialises an instance so that parse_instance reproduces it exactly.
inline std::string emit_instance(const Instance& inst) {
  std::ostringstream os;
  os << "[arcs]\n";
  for (const auto& f : inst.network.arcs()) {
    os << "arc =";
    for (double a : f.coefficients()) os << ' ' << format_exact(a);
    os << '\n';
  }
  os << "[profile]\n";
  os << "individuals = " << format_exact(inst.profile.individual_weight()) << '\n';
  os << "coalitions =";
  for (double t : inst.profile.coalition_weights()) os << ' ' << format_exact(t);
  os << '\n';
  const auto& s = inst.settings;
  os << "[settings]\n";
  os << "level_tolerance = " << format_exact(s.level_tolerance) << '\n';
  os << "gap_tolerance = " << format_exact(s.gap_tolerance) << '\n';
  os << "max_outer_iterations = " << s.max_outer_iterations << '\n';
  os << "support_epsilon = " << format_exact(s.support_epsilon) << '\n';
  os << "flow_tolerance = " << format_exact(s.flow_tolerance) << '\n';
  return os.str();
}

/// Human-readable rendering: per-arc flow table, then the cost summary.
/// The Wardrop line "W = ..." appears when there are no coalitions.
inline std::string emit_report(const EquilibriumReport& r, const CompositionProfile& p) {
  std::ostringstream os;
  const std::size_t coalitions = p.coalitions();
  os << "arc";
  os << "\tx^0";
  for (std::size_t k = 1; k <= coalitions; ++k) os << "\tx^" << k;
  os << "\tx\tc(x)\n";
  const auto agg = r.flow.aggregate();
  for (std::size_t a = 0; a < r.flow.arcs(); ++a) {
    os << (a + 1);
    for (std::size_t g = 0; g <= coalitions; ++g) os << '\t' << format_number(r.flow(g, a));
    os << '\t' << format_number(agg[a]) << '\t' << format_number(r.costs.arc_costs[a]) << '\n';
  }
  const auto& c = r.costs;
  if (coalitions == 0) os << "W = " << format_number(c.social) << '\n';
  if (c.individual_avg) os << "Y^0 = " << format_number(*c.individual_avg) << '\n';
  for (std::size_t k = 0; k < coalitions; ++k) os << "Y^" << (k + 1) << " = " << format_number(c.coalition_avg[k]) << '\n';
  os << "Y = " << format_number(c.social) << '\n';
  os << "c^0 = " << format_number(c.individual_level) << '\n';
  for (std::size_t k = 0; k < coalitions; ++k)
    os << "chat^" << (k + 1) << " = " << format_number(c.coalition_marginal[k]) << '\n';
  os << "gap = " << format_number(r.gap) << '\n';
  os << "iterations = " << r.iterations << '\n';
  return os.str();
}

/// Comma-separated table with a fixed header; rows are written as given.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { add_row(std::move(header)); }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_) throw std::logic_error("csv row has wrong column count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  const std::string& str() const { return text_; }

private:
  std::size_t columns_;
  std::string text_;
};

} // namespace compeq
