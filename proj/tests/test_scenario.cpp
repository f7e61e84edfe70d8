#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "phienv/scenario.hpp"

using namespace phienv;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) out.push_back(detail::split_list(line));
  return out;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  ADD_FAILURE() << "no column " << name;
  return 0;
}

const char* kQuad = R"(
[run]
seed = 5

[scenario.quad]
family = euclidean
gamma = 1
function = quad
y_lo = -2
y_hi = 2
y_points = 41
checks = gradient, fenchel_young
)";

}  // namespace

TEST(Scenario, IniErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("[run]\nseed = 1\nnonsense\n"), 3u);
  EXPECT_EQ(error_line("[run]\nseed = 1\nseed = 2\n"), 3u);
  EXPECT_EQ(error_line("seed = 1\n"), 1u);
  EXPECT_EQ(error_line("[run\n"), 1u);
  EXPECT_EQ(error_line("[run]\n\n[bogus]\n"), 3u);
  EXPECT_EQ(error_line("[run]\ncolour = red\n"), 2u);
  EXPECT_EQ(error_line("[suite]\ntol.nothing = 1\n"), 2u);
  EXPECT_EQ(error_line("[suite]\ncriteria = twist_round_trip, nope\n"), 2u);
  const std::string base = "[scenario.a]\nfamily = euclidean\nfunction = quad\ny_lo = -1\ny_hi = 1\n";
  EXPECT_EQ(error_line(base + "gamma = -1\n"), 6u);
  EXPECT_EQ(error_line(base + "checks = gradient, magic\n"), 6u);
  EXPECT_EQ(error_line(base + "expect = maybe\n"), 6u);
  EXPECT_EQ(error_line("[scenario.a]\nfamily = nope\nfunction = quad\ny_lo = 0\ny_hi = 1\n"), 2u);
  EXPECT_EQ(error_line("[scenario.a]\nfamily = euclidean\nfunction = nope\ny_lo = 0\ny_hi = 1\n"), 3u);
  // y grid outside Y for the entropic coupling.
  EXPECT_EQ(error_line("[scenario.a]\nfamily = entropic\nkernel = kl_generator\nfunction = quad\ny_lo = -1\ny_hi = 1\n"),
            5u);
  // Missing required key is reported at the section header.
  EXPECT_EQ(error_line("\n[scenario.a]\nfamily = euclidean\ny_lo = 0\ny_hi = 1\n"), 2u);
  // Comments and blank lines are ignored.
  EXPECT_NO_THROW(parse("; comment\n[run] # trailing\nseed = 4 ; four\n"));
  try {
    parse("[run]\nseed = x\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("'seed'"), std::string::npos);
  }
}

TEST(Scenario, ParsesFields) {
  const RunConfig rc = parse(std::string(kQuad) + "\n[suite]\ntol.gradient_fd = 1e-3\ncriteria = desk_values\n");
  EXPECT_EQ(rc.seed, 5u);
  EXPECT_DOUBLE_EQ(rc.tolerances.gradient_fd, 1e-3);
  ASSERT_EQ(rc.criteria.size(), 1u);
  ASSERT_EQ(rc.scenarios.size(), 1u);
  const ScenarioConfig& s = rc.scenarios[0];
  EXPECT_EQ(s.name, "quad");
  EXPECT_EQ(s.y_points, 41u);
  EXPECT_EQ(s.checks, (std::vector<std::string>{"gradient", "fenchel_young"}));
  const RunConfig two = parse(
      "[scenario.b]\nfamily = left_bregman\nkernel = boltzmann_shannon\nfunction = quad\ndim = 2\n"
      "y_lo = 0.5, 1\ny_hi = 2\ny_points = 3\n");
  EXPECT_EQ(two.scenarios[0].y_lo, vec({0.5, 1.0}));
  EXPECT_EQ(two.scenarios[0].y_hi, vec({2.0, 2.0}));
}

TEST(Scenario, QuadEuclideanEnvelope) {
  const RunConfig rc = parse(kQuad);
  const ScenarioReport rep = run_scenario(rc.scenarios[0], rc.seed);
  const auto t = rows(rep.csv);
  ASSERT_EQ(t.size(), 42u);
  const std::size_t env = column(t[0], "envelope"), grad = column(t[0], "grad_1");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double y = std::stod(t[i][0]);
    EXPECT_NEAR(std::stod(t[i][env]), -y * y / 4.0, 1e-6) << y;
    EXPECT_NEAR(std::stod(t[i][grad]), -y / 2.0, 1e-6) << y;
  }
  EXPECT_TRUE(rep.ok());
}

TEST(Scenario, CounterexampleAllRowsFail) {
  const RunConfig rc = parse(R"(
[scenario.cx]
family = exp_coupling
function = const_rho
y_lo = -1
y_hi = 1
y_points = 5
xbar_lo = -1
xbar_hi = 1
xbar_points = 5
checks = subgradient
expect = fail
)");
  const ScanResult res = run_scan(rc);
  ASSERT_EQ(res.scenarios.size(), 1u);
  const auto& [name, t] = res.scenarios[0].tallies.at(0);
  EXPECT_EQ(name, "subgradient");
  EXPECT_EQ(t.failed, 5u);
  EXPECT_EQ(t.passed, 0u);
  EXPECT_TRUE(res.ok());
  const auto s = rows(res.summary_csv);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].back(), "ok");
  // The same scenario expected to pass is a mismatch.
  RunConfig flipped = rc;
  flipped.scenarios[0].expect_pass = true;
  EXPECT_FALSE(run_scan(flipped).ok());
}

TEST(Scenario, EmptyChecksGiveEnvelopeOnly) {
  const RunConfig rc = parse("[scenario.e]\nfamily = euclidean\ngamma = 0.5\nfunction = huber\ny_lo = -1\ny_hi = 1\n");
  const ScenarioReport rep = run_scenario(rc.scenarios[0], 1);
  const auto t = rows(rep.csv);
  EXPECT_EQ(t[0], (std::vector<std::string>{"y_1", "status", "envelope", "n_minimizers", "boundary_hit", "prox_1"}));
  EXPECT_EQ(t.size(), 12u);
  ASSERT_EQ(rep.tallies.size(), 1u);
  EXPECT_EQ(rep.tallies[0].first, "envelope");
  EXPECT_TRUE(rep.ok());
}

TEST(Scenario, DegenerateGridAxes) {
  const RunConfig rc = parse(
      "[scenario.q]\nfamily = quadratic_transform\nfunction = neg_abs\ny_lo = 0, 0.5\ny_hi = 0, 2\ny_points = 4\n"
      "xbar_lo = 0\nxbar_hi = 0\nchecks = subgradient\nexpect = fail\n");
  const ScenarioReport rep = run_scenario(rc.scenarios[0], 1);
  const auto t = rows(rep.csv);
  ASSERT_EQ(t.size(), 5u);
  for (std::size_t i = 1; i < t.size(); ++i) {
    EXPECT_EQ(t[i][0], "0");
    EXPECT_EQ(t[i][2], "multi_valued");
  }
  EXPECT_TRUE(rep.ok());
}

TEST(Scenario, Deterministic) {
  const RunConfig rc = parse(std::string(kQuad) + R"(
[scenario.dw]
family = euclidean
gamma = 0.05
function = double_well
y_lo = 0.8
y_hi = 1.4
y_points = 4
checks = prox_single_valued, regularity, subgradient
)");
  const ScanResult a = run_scan(rc), b = run_scan(rc);
  ASSERT_EQ(a.scenarios.size(), 2u);
  for (std::size_t i = 0; i < a.scenarios.size(); ++i) EXPECT_EQ(a.scenarios[i].csv, b.scenarios[i].csv);
  EXPECT_EQ(a.summary_csv, b.summary_csv);
  EXPECT_TRUE(a.ok()) << a.summary_csv;
}

TEST(Scenario, SuiteSummaryCsv) {
  AcceptanceTolerances tol;
  tol.set("gradient_fd", 1e-16);
  const auto results = run_acceptance(tol, {"gradient_formula", "desk_values"});
  ASSERT_EQ(results.size(), 2u);
  EXPECT_FALSE(results[0].passed);
  const auto t = rows(suite_summary_csv(results));
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1][1], "gradient_formula");
  EXPECT_EQ(t[1][2], "0");
  EXPECT_EQ(t[2][2], "1");
  EXPECT_THROW(tol.set("nope", 1.0), Error);
}
