#include <gtest/gtest.h>

#include <clocale>
#include <fstream>
#include <sstream>

#include "compeq/io.hpp"
#include "support.hpp"

namespace compeq {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fixture(const std::string& name) { return read_file(std::string(COMPEQ_FIXTURES) + "/" + name); }

// Expects a ParseError whose field path is `field`.
void expect_parse_error(const std::string& text, const std::string& field, const std::string& fragment) {
  try {
    parse_instance(text);
    ADD_FAILURE() << "accepted:\n" << text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), field) << e.what();
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(ParseInstance, BundledExamples) {
  const auto one = parse_instance(fixture("example1.inst"));
  ASSERT_EQ(one.network.size(), 2u);
  EXPECT_EQ(one.network[0], CostFunction({10.0, 1.0}));
  EXPECT_EQ(one.profile.individual_weight(), 0.9);
  EXPECT_EQ(one.profile.coalitions(), 1u);
  EXPECT_EQ(one.settings, SolverSettings{});

  const auto two = parse_instance(fixture("example2.inst"));
  EXPECT_EQ(two.profile.coalitions(), 2u);
  EXPECT_EQ(two.profile.weight(2), 0.25);

  const auto none = parse_instance(fixture("nonatomic.inst"));
  EXPECT_EQ(none.profile.coalitions(), 0u);
  EXPECT_EQ(none.profile.individual_weight(), 1.0);

  const auto atomic = parse_instance(fixture("atomic.inst"));
  EXPECT_EQ(atomic.network.size(), 3u);
  EXPECT_EQ(atomic.profile.individual_weight(), 0.0);
  EXPECT_EQ(atomic.settings.gap_tolerance, 1e-10);
}

TEST(ParseInstance, OptionalPiecesAndSyntax) {
  const auto inst = parse_instance("[arcs]\narc = +1 2e0   # trailing comment\n\n[profile]\nindividuals=1\n");
  EXPECT_EQ(inst.network[0], CostFunction({1.0, 2.0}));
  EXPECT_EQ(inst.profile.coalitions(), 0u);

  const auto crlf = parse_instance("[arcs]\r\narc = 1 2\r\n[profile]\r\nindividuals = 0.5\r\ncoalitions = 0.5\r\n");
  EXPECT_EQ(crlf.profile.coalitions(), 1u);

  const auto settings = parse_instance(
      "[arcs]\narc = 1 1\n[profile]\nindividuals = 1\n[settings]\nmax_outer_iterations = 50\nsupport_epsilon = 1e-8\n");
  EXPECT_EQ(settings.settings.max_outer_iterations, 50);
  EXPECT_EQ(settings.settings.support_epsilon, 1e-8);
}

TEST(ParseInstance, ErrorsCarryFieldPaths) {
  const std::string arcs = "[arcs]\narc = 10 1\n";
  expect_parse_error(arcs + "arc = 1 2 -1\n[profile]\nindividuals = 1\n", "arcs[1]", "negative coefficient");
  expect_parse_error(arcs + "arc = 1 1O\n[profile]\nindividuals = 1\n", "arcs[1]", "malformed number '1O'");
  expect_parse_error(arcs + "arc = 5\n[profile]\nindividuals = 1\n", "arcs[1]", "degree");
  expect_parse_error(arcs + "[profile]\nindividuals = 0.4\ncoalitions = 0.5\n", "profile", "sum to 1");
  expect_parse_error(arcs + "[profile]\nindividuals = 0.2\ncoalitions = 0.3 0.5\n", "profile", "non-increasing");
  expect_parse_error(arcs + "[profile]\ncoalitions = 1\n", "profile.individuals", "missing");
  expect_parse_error(arcs + "[profile]\nindividuals = 1\ndemand = 1\n", "profile.demand", "unknown field");
  expect_parse_error(arcs + "[profile]\nindividuals = 1\nindividuals = 1\n", "profile.individuals", "duplicate");
  expect_parse_error(arcs + "[profile]\nindividuals = 1\n[settings]\ngap_tolerance = 0\n", "settings.gap_tolerance",
                     "");
  expect_parse_error(arcs + "[profile]\nindividuals = 1\n[settings]\nmax_outer_iterations = 2.5\n",
                     "settings.max_outer_iterations", "positive integer");
  expect_parse_error("[profile]\nindividuals = 1\n", "arcs", "at least one arc");
  expect_parse_error("[profile]\nindividuals = 1\n[arcs]\narc = 1 1\n", "arcs", "must appear");
  expect_parse_error(arcs + "[nodes]\n", "nodes", "unknown section");
  expect_parse_error("arc = 1 1\n", "arc", "outside");
}

TEST(ParseInstance, ErrorsCarryLineNumbers) {
  try {
    parse_instance("# header\n[arcs]\narc = 1 1\narc = 2 x\n[profile]\nindividuals = 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(std::string(e.what()).rfind("line 4: arcs[1]: ", 0), 0u) << e.what();
  }
}

TEST(EmitInstance, RoundTripsRandomInstances) {
  testing::Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst{testing::random_network(rng, 5), testing::random_profile(rng, 4), SolverSettings{}};
    inst.settings.gap_tolerance = testing::uniform(rng, 1e-12, 1e-6);
    inst.settings.max_outer_iterations = testing::uniform_int(rng, 1, 100000);
    const auto text = emit_instance(inst);
    const auto back = parse_instance(text);
    ASSERT_EQ(back, inst) << text;
    ASSERT_EQ(emit_instance(back), text);
  }
}

TEST(EmitReport, WardropGame) {
  const auto inst = parse_instance(fixture("nonatomic.inst"));
  const auto r = solve_ce(inst.network, inst.profile);
  const auto text = emit_report(r, inst.profile);
  EXPECT_NE(text.find("W = 10.0909090909\n"), std::string::npos) << text;
  EXPECT_NE(text.find("\ngap = "), std::string::npos);
  EXPECT_EQ(text.find("chat^"), std::string::npos);
  EXPECT_EQ(text.rfind("arc\tx^0\tx\tc(x)\n", 0), 0u);
}

TEST(EmitReport, TwoCoalitions) {
  const auto inst = parse_instance(fixture("example2.inst"));
  const auto r = solve_ce(inst.network, inst.profile);
  const auto text = emit_report(r, inst.profile);
  EXPECT_EQ(text.find("W = "), std::string::npos);
  const auto one = text.find("chat^1 = ");
  const auto two = text.find("chat^2 = ");
  ASSERT_NE(one, std::string::npos);
  ASSERT_NE(two, std::string::npos);
  EXPECT_LT(one, two);
  EXPECT_EQ(text.find("chat^3"), std::string::npos);
  EXPECT_EQ(text.rfind("arc\tx^0\tx^1\tx^2\tx\tc(x)\n", 0), 0u);
}

TEST(FormatNumber, LocaleIndependentAndStable) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(111.0 / 11.0), "10.0909090909");
  EXPECT_EQ(format_number(1e-12), "1e-12");
  EXPECT_EQ(format_exact(0.1 + 0.2), "0.30000000000000004");
  const char* previous = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = previous ? previous : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8")) {
    EXPECT_EQ(format_number(2.5), "2.5");
    EXPECT_EQ(parse_instance("[arcs]\narc = 0.5 1.5\n[profile]\nindividuals = 1\n").network[0],
              CostFunction({0.5, 1.5}));
  }
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(CsvWriter, FixedColumns) {
  CsvWriter csv({"a", "b"});
  csv.add_row({"1", "2"});
  EXPECT_EQ(csv.str(), "a,b\n1,2\n");
  EXPECT_THROW(csv.add_row({"1"}), std::logic_error);
}

} // namespace
} // namespace compeq
