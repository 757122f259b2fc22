#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "pmpc/closed_loop.hpp"
#include "pmpc/plots.hpp"
#include "pmpc/run_log.hpp"
#include "pmpc/summary.hpp"

namespace pmpc {
namespace {

namespace fs = std::filesystem;

const char* const kBundled[] = {"experiment1_nominal", "experiment2_mass",    "experiment3_push", "experiment4a_layouts",
                                "experiment4b_layouts", "hover",             "free_fall",        "single_obstacle"};

std::string scenario_path(const std::string& name) { return std::string(PMPC_SCENARIO_DIR) + "/" + name + ".yaml"; }

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pmpc_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int count_data_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  int n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

std::vector<std::string> header_of(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
  }
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, ',')) cols.push_back(c);
  return cols;
}

ScenarioSpec short_hover(double duration) {
  ScenarioSpec s = load_scenario(scenario_path("hover"));
  s.duration = duration;
  return s;
}

TEST(ScenarioFile, BundledScenariosRoundTrip) {
  for (const char* name : kBundled) {
    const ScenarioSpec a = load_scenario(scenario_path(name));
    const std::string text = serialize_scenario(a);
    const ScenarioSpec b = parse_scenario_string(text);
    EXPECT_EQ(serialize_scenario(b), text) << name;
    EXPECT_EQ(b.obstacles.size(), a.obstacles.size()) << name;
    EXPECT_EQ(b.nominal.payload.mass, a.nominal.payload.mass) << name;
    EXPECT_EQ(b.truth.payload.mass, a.truth.payload.mass) << name;
  }
}

TEST(ScenarioFile, PaperParameters) {
  const ScenarioSpec e1 = load_scenario(scenario_path("experiment1_nominal"));
  EXPECT_EQ(e1.obstacles.size(), 6u);
  EXPECT_DOUBLE_EQ(e1.hocbf.d_th, 0.5);
  EXPECT_DOUBLE_EQ(e1.reference.speed, 0.3);
  EXPECT_DOUBLE_EQ(e1.nominal.payload.mass, 5.0);
  EXPECT_GE(e1.duration, 30.0);
  const ScenarioSpec e3 = load_scenario(scenario_path("experiment3_push"));
  EXPECT_DOUBLE_EQ(e3.hocbf.d_th, 0.6);
  EXPECT_DOUBLE_EQ(e3.truth.payload.mass, 11.2);
  EXPECT_DOUBLE_EQ(e3.nominal.payload.mass, 5.0);
  ASSERT_EQ(e3.disturbances.size(), 1u);
  EXPECT_EQ(e3.disturbances[0].force, Vector3d(0, 80, 0));
  EXPECT_DOUBLE_EQ(e3.disturbances[0].duration, 0.3);
}

TEST(ScenarioFile, DiagnosticsCarryLineNumbers) {
  const std::string negative_mass =
      "name: bad\n"
      "duration_s: 1\n"
      "nominal:\n"
      "  robot_mass_kg: -15\n";
  try {
    parse_scenario_string(negative_mass);
    FAIL() << "negative mass accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  try {
    parse_scenario_string("name: x\ndurration_s: 3\n");
    FAIL() << "misspelled key accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  try {
    parse_scenario_string("name: x\nsafety:\n  d_th_m: 0\n");
    FAIL() << "zero threshold accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_scenario_string("name: [unclosed\n"), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.yaml"), ConfigError);
  EXPECT_THROW(parse_scenario_string("safety:\n  margin_m: -0.1\n"), ConfigError);
}

TEST(References, ZeroSpeedIsConstantFormation) {
  const ScenarioSpec s = load_scenario(scenario_path("hover"));
  const auto refs = generate_references(s, 3.0, 8, s.ocp.ts);
  ASSERT_EQ(refs.size(), 9u);
  for (const auto& r : refs) EXPECT_EQ(r, VectorXd(initial_state(s)));
}

TEST(References, AdvanceAtPathSpeed) {
  ScenarioSpec s;
  s.reference.waypoints = {Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 0)};
  s.reference.speed = 0.3;
  const GlobalState a = reference_state(s, 0.0), b = reference_state(s, 1.0);
  EXPECT_NEAR(b(24) - a(24), 0.3, 1e-12);
  EXPECT_NEAR(b(24 + idx::kVel), 0.3, 1e-12);
}

TEST(References, RobotsSitAtFormationOffsets) {
  ScenarioSpec s;
  s.reference.waypoints = {Eigen::Vector2d(0, 0), Eigen::Vector2d(4, 3), Eigen::Vector2d(4, 8)};
  for (double t : {0.0, 5.0, 17.0, 21.0, 60.0}) {
    const GlobalState x = reference_state(s, t);
    EXPECT_LT(holonomic_residuals(s.nominal, x).cwiseAbs().maxCoeff(), 1e-12);
    for (int b = 0; b < 2; ++b) EXPECT_EQ(x(12 * b + idx::kEuler + 2), x(24 + idx::kEuler + 2));
  }
}

TEST(References, VelocityMatchesPositionDifference) {
  ScenarioSpec s;
  s.reference.waypoints = {Eigen::Vector2d(0, 0), Eigen::Vector2d(4, 3), Eigen::Vector2d(4, 8)};
  s.reference.speed = 0.4;
  const double dt = 1e-3;
  for (double t : {1.0, 7.0, 14.0, 20.0}) {
    const GlobalState a = reference_state(s, t), b = reference_state(s, t + dt);
    for (int body = 0; body < 3; ++body) {
      const Eigen::Vector2d fd = (b.segment<2>(12 * body) - a.segment<2>(12 * body)) / dt;
      EXPECT_LT((fd - a.segment<2>(12 * body + idx::kVel)).norm(), 1e-9);
    }
  }
}

TEST(ClosedLoop, ZeroLengthRunIsEmptyButValid) {
  const RunLog log = run_closed_loop(short_hover(0.0));
  EXPECT_TRUE(log.rows.empty());
  EXPECT_EQ(log.meta.termination, "completed");
  const RunSummary s = summarize(log);
  EXPECT_EQ(s.samples, 0);
  const fs::path dir = scratch_dir("empty");
  const PlotFiles f = export_plots(log, dir.string(), "empty");
  for (const auto& p : {f.velocities, f.wrenches, f.barriers, f.traces}) {
    EXPECT_EQ(count_data_rows(p), 0) << p;
    EXPECT_FALSE(header_of(p).empty()) << p;
  }
}

TEST(ClosedLoop, FreeFallStaysRigid) {
  const RunLog log = run_closed_loop(load_scenario(scenario_path("free_fall")));
  ASSERT_EQ(log.meta.termination, "completed");
  ASSERT_FALSE(log.rows.empty());
  for (const auto& r : log.rows) EXPECT_LT(r.phi.maxCoeff(), 1e-8);
}

TEST(RunLog, CsvAndBinaryRoundTrip) {
  const RunLog log = run_closed_loop(short_hover(0.25));
  ASSERT_EQ(log.rows.size(), 15u);
  const fs::path dir = scratch_dir("logs");
  write_log_csv(log, (dir / "run.csv").string());
  write_log_binary(log, (dir / "run.bin").string());
  const RunLog csv = read_log((dir / "run.csv").string());
  const RunLog bin = read_log((dir / "run.bin").string());
  ASSERT_EQ(csv.rows.size(), log.rows.size());
  ASSERT_EQ(bin.rows.size(), log.rows.size());
  for (size_t i = 0; i < log.rows.size(); ++i) {
    EXPECT_EQ(row_values(bin.rows[i]), row_values(log.rows[i]));
    EXPECT_EQ(row_values(csv.rows[i]), row_values(log.rows[i]));
  }
  // The summary is a pure function of the stored log.
  const std::string original = summary_yaml(summarize(log));
  EXPECT_EQ(summary_yaml(summarize(csv)), original);
  EXPECT_EQ(summary_yaml(summarize(bin)), original);
  EXPECT_EQ(csv.meta.scenario, log.meta.scenario);
  EXPECT_EQ(csv.meta.horizon, 8);
}

TEST(RunLog, RejectsForeignFiles) {
  const fs::path dir = scratch_dir("foreign");
  std::ofstream(dir / "junk.csv") << "hello,world\n1,2\n";
  EXPECT_THROW(read_log((dir / "junk.csv").string()), Error);
}

TEST(Summary, DeterministicAcrossRuns) {
  ScenarioSpec s = load_scenario(scenario_path("single_obstacle"));
  s.duration = 0.5;
  const std::string a = summary_yaml(summarize(run_closed_loop(s)));
  const std::string b = summary_yaml(summarize(run_closed_loop(s)));
  EXPECT_EQ(a, b);
}

TEST(Plots, BarrierColumnsAndRowCounts) {
  RunLog log;
  log.meta.obstacles = load_scenario(scenario_path("experiment1_nominal")).obstacles;
  for (int k = 0; k < 7; ++k) {
    LogRow r;
    r.t = k * 0.01667;
    r.h.assign(18, 1.0 + k);
    log.rows.push_back(r);
  }
  const fs::path dir = scratch_dir("plots");
  const PlotFiles f = export_plots(log, dir.string(), "e1");
  const auto cols = header_of(f.barriers);
  EXPECT_EQ(std::count_if(cols.begin(), cols.end(), [](const std::string& c) { return c.rfind("h_", 0) == 0; }), 18);
  EXPECT_EQ(count_data_rows(f.traces), 7);
  EXPECT_EQ(count_data_rows(f.velocities), 7);
  EXPECT_EQ(count_data_rows(f.wrenches), 7);
  EXPECT_EQ(count_data_rows(f.barriers), 7);
}

}  // namespace
}  // namespace pmpc
