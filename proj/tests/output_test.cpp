#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vibresc/numfmt.hpp"
#include "vibresc/output.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/simulation.hpp"

using namespace vibresc;

namespace {

Scenario short_run() {
  Scenario s = scenario_defaults("mass_spring");
  s.integration.tf = 1.0;
  return s;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::size_t fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

std::string csv_text(const Trajectory& tr, const DerivedSignals& d, int stride = 1, const Trajectory* avg = nullptr,
                     const DerivedSignals* avg_d = nullptr) {
  std::ostringstream o;
  write_csv(o, tr, d, stride, avg, avg_d);
  return o.str();
}

Trajectory first_samples(const Trajectory& tr, std::size_t n) {
  Trajectory out = tr;
  out.times.resize(n);
  out.states.resize(n);
  return out;
}

}  // namespace

TEST(Csv, HeaderPlusOneLinePerSample) {
  const Scenario s = short_run();
  const Trajectory tr = first_samples(simulate_scenario(s), 3);
  const std::string text = csv_text(tr, derive_signals(s, tr));
  const auto lines = lines_of(text);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "t,q1,qd1,uhat,J,V,Vdot,u_applied");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
}

TEST(Csv, ColumnCountsWithAndWithoutAveragedBlock) {
  for (std::size_t n : {1u, 2u}) {
    EXPECT_EQ(csv_columns(n, false).size(), 1 + (2 * n + 1) + 4);
    EXPECT_EQ(csv_columns(n, true).size(), 1 + 2 * ((2 * n + 1) + 4));
  }
  const Scenario s = short_run();
  const Trajectory tr = simulate_scenario(s), avg = simulate_averaged(s);
  const DerivedSignals d = derive_signals(s, tr), ad = derive_signals(s, avg, true);
  for (const auto& l : lines_of(csv_text(tr, d, 1, &avg, &ad))) EXPECT_EQ(fields(l), 1 + 2 * 7u);
  EXPECT_THROW(csv_text(tr, d, 1, &avg, nullptr), DimensionError);
}

TEST(Csv, ValuesRoundTripAtSeventeenDigits) {
  const Scenario s = short_run();
  const Trajectory tr = simulate_scenario(s);
  const auto lines = lines_of(csv_text(tr, derive_signals(s, tr)));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(*parse_double(cell));
    EXPECT_EQ(v[0], tr.times[i - 1]);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(v[static_cast<std::size_t>(k) + 1], tr.states[i - 1](k));
  }
}

TEST(Csv, StrideKeepsTheLastSample) {
  const Scenario s = short_run();
  const Trajectory tr = first_samples(simulate_scenario(s), 10);
  const auto lines = lines_of(csv_text(tr, derive_signals(s, tr), 4));
  ASSERT_EQ(lines.size(), 1 + 4u);
  EXPECT_EQ(lines.back().substr(0, lines.back().find(',')), format_significant(tr.times[9]));
  EXPECT_THROW(csv_text(tr, derive_signals(s, tr), 0), InvalidArgument);
}

TEST(Csv, ByteIdenticalAcrossRuns) {
  const Scenario s = short_run();
  const Trajectory a = simulate_scenario(s), b = simulate_scenario(s);
  EXPECT_EQ(csv_text(a, derive_signals(s, a)), csv_text(b, derive_signals(s, b)));
}

TEST(Csv, UnwritablePathIsIoError) {
  const Scenario s = short_run();
  const Trajectory tr = first_samples(simulate_scenario(s), 3);
  const auto dir = vt::scratch_dir("output_io");
  EXPECT_THROW(emit_csv(dir / "missing" / "x.csv", tr, derive_signals(s, tr)), IoError);
  EXPECT_THROW(emit_svg_plot(trajectory_panels(tr, derive_signals(s, tr)), dir / "missing" / "x.svg"), IoError);
}

TEST(Svg, TwoPointSeriesIsOnePolyline) {
  const std::string svg = render_svg({PlotPanel{"q1", {PlotSeries{{0.0, 1.0}, {0.0, 2.0}, false, "q1"}}}});
  std::size_t count = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++count;
  EXPECT_EQ(count, 1u);
  EXPECT_NE(svg.find("t [s]"), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(Svg, DegenerateInputsAreRejected) {
  EXPECT_THROW(render_svg({}), InvalidArgument);
  EXPECT_THROW(render_svg({PlotPanel{"q1", {}}}), InvalidArgument);
  EXPECT_THROW(render_svg({PlotPanel{"q1", {PlotSeries{{0.0}, {1.0}, false, "q1"}}}}), InvalidArgument);
  EXPECT_THROW(render_svg({PlotPanel{"q1", {PlotSeries{{0.0, 1.0}, {1.0}, false, "q1"}}}}), DimensionError);
}

TEST(Svg, PanelsForOneDegreeOfFreedom) {
  const Scenario s = short_run();
  const Trajectory tr = simulate_scenario(s), avg = simulate_averaged(s);
  const DerivedSignals d = derive_signals(s, tr), ad = derive_signals(s, avg, true);
  const auto plain = trajectory_panels(tr, d);
  ASSERT_EQ(plain.size(), 4u);
  EXPECT_EQ(plain[0].signal, "q1");
  EXPECT_EQ(plain[3].signal, "Vdot");
  const auto both = trajectory_panels(tr, d, &avg, &ad);
  for (const auto& p : both) {
    ASSERT_EQ(p.series.size(), 2u);
    EXPECT_TRUE(p.series[1].dashed);
  }
  EXPECT_NE(render_svg(both).find("stroke-dasharray"), std::string::npos);
}

TEST(Svg, LongSeriesAreDecimated) {
  PlotSeries s;
  for (int i = 0; i < 100000; ++i) {
    s.t.push_back(i * 1e-3);
    s.y.push_back(i % 2 ? 1.0 : -1.0);
  }
  PlotStyle style;
  const auto pts = detail::decimate(s, style.max_points);
  EXPECT_LE(pts.size(), static_cast<std::size_t>(2 * style.max_points + 2));
  double lo = 0, hi = 0;
  for (const auto& [t, v] : pts) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_EQ(lo, -1.0);
  EXPECT_EQ(hi, 1.0);
}
