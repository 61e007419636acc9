#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vibresc/numfmt.hpp"
#include "vibresc/runner.hpp"

using namespace vibresc;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<double>> read_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::vector<double> v;
    for (std::string cell; std::getline(row, cell, ',');) v.push_back(parse_double(cell).value_or(NAN));
    rows.push_back(v);
  }
  return rows;
}

}  // namespace

TEST(Runner, MassSpringWritesFilesAndConverges) {
  const auto dir = vt::scratch_dir("runner_ms");
  Scenario s = scenario_defaults("mass_spring");
  s.outputs.svg = "mass_spring.svg";
  s.outputs.averaged = true;
  const RunResult r = run_scenario(s, dir);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  ASSERT_EQ(r.files.size(), 3u);
  for (const auto& f : r.files) EXPECT_GT(fs::file_size(f), 0u) << f;
  EXPECT_TRUE(fs::exists(dir / "mass_spring.summary.json"));

  const auto rows = read_rows(dir / s.outputs.csv);
  const double T = s.period();
  const double tf = rows.back()[0];
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : rows) {
    if (row[0] >= tf - std::floor(0.1 * tf / T) * T - 1e-9) {
      sum += row[1];
      ++count;
    }
  }
  EXPECT_NEAR(sum / static_cast<double>(count), 1.0, 0.05);
  const auto& rep = r.summary["report"];
  EXPECT_NEAR(rep["steady_state_mean"][0].get<double>(), 1.0, 0.05);
  EXPECT_GT(rep["uhat_steady_mean"].get<double>(), 0.0);
  EXPECT_LT(r.summary["closeness_lifted"].get<double>(), r.summary["closeness_raw"].get<double>());
}

TEST(Runner, FlappingAppliedControlAveragesOut) {
  const auto dir = vt::scratch_dir("runner_flap");
  const RunResult r = run_scenario(scenario_defaults("flapping"), dir);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const auto& u = r.summary["applied_control"];
  EXPECT_LT(u["final_window_mean_norm"].get<double>() / u["peak_period_mean_norm"].get<double>(), 0.05);
}

TEST(Runner, InvalidScenarioExitsWithConfigCode) {
  Scenario s = scenario_defaults("mass_spring");
  s.integration.tf = s.integration.t0;
  const RunResult r = run_scenario(s, vt::scratch_dir("runner_bad"));
  EXPECT_EQ(r.exit_code, kExitConfig);
  EXPECT_TRUE(r.files.empty());
}

TEST(Runner, AveragedOutputNeedsProposedController) {
  Scenario s = scenario_defaults("comparison_grushkovskaya");
  s.outputs.averaged = true;
  EXPECT_EQ(run_scenario(s, vt::scratch_dir("runner_avg")).exit_code, kExitConfig);
}

TEST(Runner, DivergentBaselineWritesPartialCsv) {
  const auto dir = vt::scratch_dir("runner_div");
  const Scenario s = scenario_defaults("comparison_suttner");
  const RunResult r = run_scenario(s, dir);
  EXPECT_EQ(r.exit_code, kExitNumerical) << r.message;
  ASSERT_EQ(r.files.size(), 1u);
  const auto rows = read_rows(r.files[0]);
  ASSERT_FALSE(rows.empty());
  for (const auto& row : rows) {
    for (double v : row) ASSERT_TRUE(std::isfinite(v));
  }
  EXPECT_LT(rows.back()[0], s.integration.tf);
  EXPECT_FALSE(fs::exists(dir / "comparison_suttner.summary.json"));
}

TEST(Runner, UnwritableDirectoryExitsWithIoCode) {
  const auto dir = vt::scratch_dir("runner_io");
  std::ofstream(dir / "blocker") << "x";
  const RunResult r = run_scenario(scenario_defaults("mass_spring"), dir / "blocker" / "out");
  EXPECT_EQ(r.exit_code, kExitIo) << r.message;
}

TEST(Runner, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ConfigError("x", 1, 1, "bad")), kExitConfig);
  EXPECT_EQ(exit_code_for(DimensionError("q", "bad")), kExitConfig);
  EXPECT_EQ(exit_code_for(NumericalError("nan")), kExitNumerical);
  EXPECT_EQ(exit_code_for(IntegrationError(1.0, 2, "nan")), kExitNumerical);
  EXPECT_EQ(exit_code_for(IoError("p", "io")), kExitIo);
}
