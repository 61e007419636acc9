#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vibresc/analysis.hpp"
#include "vibresc/benchmarks.hpp"
#include "vibresc/core.hpp"
#include "vibresc/esc_loop.hpp"
#include "vibresc/integrator.hpp"
#include "vibresc/numfmt.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/simulation.hpp"
#include "vibresc/voc_averaging.hpp"

namespace vibresc {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
};

namespace tol {
inline constexpr double kBand = 0.05;
inline constexpr double kSlopeLow = 0.7;
inline constexpr double kSlopeHigh = 1.3;
inline constexpr double kMutationFactor = 2.0;
inline constexpr double kOrder3 = 1e-4;
inline constexpr double kBracketRel = 1e-4;
inline constexpr double kLyapunovRate = 1e-9;
inline constexpr double kTransient = 0.05;
inline constexpr double kDitherMean = 1e-9;
inline constexpr double kControlRatio = 0.05;
inline constexpr double kRk4Low = 12.0;
inline constexpr double kRk4High = 20.0;
inline constexpr int kRandomStates = 50;
}  // namespace tol

namespace detail {

inline std::string fmt(double v) { return format_significant(v, 6); }

inline bool in_band(double v, double target) { return std::abs(v - target) <= tol::kBand; }

/// Uniform box sampler for frozen states; the flapping box keeps |phidot|
/// away from zero only through the guard, not by construction.
class StateSampler {
 public:
  explicit StateSampler(std::uint64_t seed) : rng_(seed) {}

  Vector operator()(const std::string& plant) {
    auto u = [this](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); };
    if (plant == "flapping") {
      Vector x(5);
      x << u(0.0, 2.0), u(-1.0, 1.0), u(-2.0, 2.0), u(-200.0, 200.0), u(-10.0, 10.0);
      return x;
    }
    Vector x(3);
    x << u(-3.0, 3.0), u(-5.0, 5.0), u(-10.0, 10.0);
    return x;
  }

  double time(double period) { return std::uniform_real_distribution<double>(0.0, period)(rng_); }

 private:
  std::mt19937_64 rng_;
};

inline Scenario cubic_lie_bracket_scenario() {
  Scenario s = scenario_defaults("comparison_grushkovskaya");
  auto p = std::get<MassSpringParams>(s.plant);
  p.damping = Damping::cubic;
  s.plant = p;
  s.name += "_cubic";
  return s;
}

}  // namespace detail

inline CriterionResult criterion_mass_spring() {
  CriterionResult r{1, "mass-spring reproduction", false, ""};
  const Scenario s = scenario_defaults("mass_spring");
  const auto rep = scenario_report(s, simulate_scenario(s));
  const auto avg = scenario_report(s, simulate_averaged(s));
  const double mean = rep.steady_state_mean(0), avg_mean = avg.steady_state_mean(0);
  r.passed = detail::in_band(mean, 1.0) && detail::in_band(avg_mean, 1.0) && rep.uhat_steady_mean > 0.0;
  r.detail = "mean q=" + detail::fmt(mean) + " averaged=" + detail::fmt(avg_mean) +
             " mean uhat=" + detail::fmt(rep.uhat_steady_mean) + " (target 1 +/- 0.05, uhat > 0)";
  return r;
}

inline CriterionResult criterion_pendulum() {
  CriterionResult r{2, "inverted pendulum reproduction", false, ""};
  const Scenario s = scenario_defaults("pendulum");
  const auto rep = scenario_report(s, simulate_scenario(s));
  const double mean = rep.steady_state_mean(0);
  r.passed = detail::in_band(mean, 2.0) && rep.uhat_steady_mean < 0.0;
  r.detail = "mean theta=" + detail::fmt(mean) + " mean uhat=" + detail::fmt(rep.uhat_steady_mean) +
             " (target 2 +/- 0.05, uhat < 0)";
  return r;
}

inline CriterionResult criterion_flapping() {
  CriterionResult r{3, "flapping height seeking", false, ""};
  const Scenario s = scenario_defaults("flapping");
  const Trajectory traj = simulate_scenario(s);
  const auto rep = scenario_report(s, traj);
  const ControlEffort e = control_effort(s, traj);
  const double z = rep.steady_state_mean(0);
  const double ratio = e.window_mean_norm / e.peak_period_mean;
  r.passed = detail::in_band(z, 1.0) && ratio < tol::kControlRatio;
  r.detail = "mean z=" + detail::fmt(z) + " |mean u|=" + detail::fmt(e.window_mean_norm) +
             " transient peak=" + detail::fmt(e.peak_period_mean) + " ratio=" + detail::fmt(ratio) + " (< 0.05)";
  return r;
}

inline CriterionResult criterion_cubic() {
  CriterionResult r{4, "cubic damping", false, ""};
  const Scenario s = scenario_defaults("mass_spring_cubic");
  const double mean = scenario_report(s, simulate_scenario(s)).steady_state_mean(0);
  r.passed = detail::in_band(mean, 1.0);
  r.detail = "mean q=" + detail::fmt(mean) + " (target 1 +/- 0.05)";
  return r;
}

inline const std::vector<double>& sweep_omegas() {
  static const std::vector<double> w = {25.0, 50.0, 100.0, 200.0};
  return w;
}

inline CriterionResult criterion_scaling() {
  CriterionResult r{5, "averaging error scales with 1/omega", false, ""};
  const Scenario base = scenario_defaults("mass_spring");
  const ScalingStudy good = epsilon_scaling_study(base, sweep_omegas());
  ScalingOptions mutated;
  mutated.correction_factor = 1.0;  // the 1/4 dropped
  const ScalingStudy bad = epsilon_scaling_study(base, sweep_omegas(), mutated);
  const bool slope_ok = good.fit.slope >= tol::kSlopeLow && good.fit.slope <= tol::kSlopeHigh;
  const bool bad_slope_ok = bad.fit.slope >= tol::kSlopeLow && bad.fit.slope <= tol::kSlopeHigh;
  const double shift = bad.closeness[1] / good.closeness[1];  // at omega = 50
  const bool detected = !bad_slope_ok || shift >= tol::kMutationFactor;
  r.passed = slope_ok && detected;
  std::ostringstream d;
  d << "slope=" << detail::fmt(good.fit.slope) << " closeness=[";
  for (std::size_t i = 0; i < good.closeness.size(); ++i) d << (i ? " " : "") << detail::fmt(good.closeness[i]);
  d << "] mutated slope=" << detail::fmt(bad.fit.slope) << " closeness ratio at omega=50: " << detail::fmt(shift);
  r.detail = d.str();
  return r;
}

struct PlantCase {
  std::string plant;
  std::string scenario;
};

inline const std::vector<PlantCase>& smooth_plants() {
  static const std::vector<PlantCase> c = {{"mass_spring", "mass_spring"}, {"pendulum", "pendulum"},
                                           {"flapping", "flapping"}};
  return c;
}

/// Residuals of the third nested bracket at seeded random smooth states.
inline std::vector<double> order3_residuals(const Scenario& s, const std::string& plant, std::uint64_t seed,
                                            int count = tol::kRandomStates) {
  const EscClosedLoop loop = make_loop(s);
  detail::StateSampler sample(seed);
  std::vector<double> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 100 * count) throw NumericalError("too many nonsmooth samples for " + plant);
    const Vector x = sample(plant);
    const auto res = bracket_order3_residual(loop, x, sample.time(loop.gains().period()));
    if (res.residual) out.push_back(*res.residual);
  }
  return out;
}

inline CriterionResult criterion_order3() {
  CriterionResult r{6, "third bracket vanishes for quadratic-in-velocity drifts", true, ""};
  std::ostringstream d;
  std::uint64_t seed = 6001;
  for (const auto& c : smooth_plants()) {
    const auto res = order3_residuals(scenario_defaults(c.scenario), c.plant, seed++);
    const double worst = *std::max_element(res.begin(), res.end());
    r.passed = r.passed && worst < tol::kOrder3;
    d << c.plant << " max=" << detail::fmt(worst) << "; ";
  }
  auto cubic = order3_residuals(scenario_defaults("mass_spring_cubic"), "mass_spring", seed);
  std::sort(cubic.begin(), cubic.end());
  const double median = cubic[cubic.size() / 2];
  r.passed = r.passed && median > tol::kOrder3 && cubic.back() > tol::kOrder3;
  d << "qdot^3 plant median=" << detail::fmt(median) << " (must exceed 1e-4)";
  r.detail = d.str();
  return r;
}

struct BracketMismatch {
  double yz = 0.0;   // worst relative mismatch of [Y,Z]
  double yyz = 0.0;  // worst relative mismatch of [Y,[Y,Z]]
};

/// ‖closed − fd‖ / (‖closed‖ + ω^j) over seeded random smooth states.
inline BracketMismatch bracket_mismatch(const Scenario& s, const std::string& plant, std::uint64_t seed,
                                        int count = tol::kRandomStates) {
  const EscClosedLoop loop = make_loop(s);
  const double w = loop.gains().omega();
  const auto n = static_cast<Eigen::Index>(loop.dof());
  detail::StateSampler sample(seed);
  BracketMismatch m;
  int used = 0, attempts = 0;
  while (used < count) {
    if (++attempts > 100 * count) throw NumericalError("too many nonsmooth samples for " + plant);
    const Vector x = sample(plant);
    const double t = sample.time(loop.gains().period());
    if (loop.system().nonsmooth_at(x.head(n), x.segment(n, n), detail::bracket_margin(x, kBracketStep, 2))) continue;
    const Vector a1 = bracket_yz_closed_form(loop, x, t), b1 = fd_bracket_yz(loop, x, t);
    const Vector a2 = bracket_yyz_closed_form(loop, x, t), b2 = fd_bracket_yyz(loop, x, t);
    m.yz = std::max(m.yz, (a1 - b1).norm() / (a1.norm() + w));
    m.yyz = std::max(m.yyz, (a2 - b2).norm() / (a2.norm() + w * w));
    ++used;
  }
  return m;
}

inline CriterionResult criterion_brackets() {
  CriterionResult r{7, "closed-form brackets match finite differences", true, ""};
  std::ostringstream d;
  std::uint64_t seed = 7001;
  for (const auto& c : smooth_plants()) {
    const auto m = bracket_mismatch(scenario_defaults(c.scenario), c.plant, seed++);
    r.passed = r.passed && m.yz < tol::kBracketRel && m.yyz < tol::kBracketRel;
    d << c.plant << " [Y,Z]=" << detail::fmt(m.yz) << " [Y,[Y,Z]]=" << detail::fmt(m.yyz) << "; ";
  }
  r.detail = d.str();
  return r;
}

inline CriterionResult criterion_lyapunov() {
  CriterionResult r{8, "Lyapunov rate along averaged trajectories", true, ""};
  std::ostringstream d;
  for (const char* name : {"mass_spring", "pendulum"}) {
    const Scenario s = scenario_defaults(name);
    const Trajectory avg = simulate_averaged(s);
    const auto c = check_lyapunov(avg, lyapunov_series(avg, make_objective(s.objective)), tol::kTransient,
                                  tol::kLyapunovRate);
    r.passed = r.passed && c.rate_ok && c.monotone;
    d << name << " max Vdot after " << detail::fmt(c.window_start) << " s=" << detail::fmt(c.max_vdot);
    if (c.last_violation) d << " last Vdot>0 at t=" << detail::fmt(*c.last_violation);
    if (c.first_increase) d << " V first increases at t=" << detail::fmt(*c.first_increase);
    d << "; ";
  }
  r.detail = d.str();
  return r;
}

inline CriterionResult criterion_dither_mean() {
  CriterionResult r{9, "dither has zero period mean", true, ""};
  std::ostringstream d;
  std::uint64_t seed = 9001;
  for (const auto& name : scenario_names()) {
    const Scenario s = scenario_defaults(name);
    detail::StateSampler sample(seed++);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      worst = std::max(worst, scenario_dither_mean(s, sample(plant_name(s.plant))).norm());
    }
    r.passed = r.passed && worst < tol::kDitherMean;
    d << name << "=" << detail::fmt(worst) << "; ";
  }
  r.detail = d.str();
  return r;
}

struct ComparisonOutcome {
  bool proposed_ok = false;
  double proposed_ptp = 0.0;
  double proposed_mean = 0.0;
  bool baseline_ok = false;  // reached a steady state near the target
  double baseline_ptp = 0.0;
  double baseline_mean = 0.0;
  std::string baseline_error;
};

/// Peak-to-peak of the coordinate over the final window for the proposed ESC
/// and the two-dither baseline.
inline ComparisonOutcome compare_two_dither() {
  ComparisonOutcome o;
  const Scenario mine = comparison_counterpart("comparison_suttner");
  const auto rep = scenario_report(mine, simulate_scenario(mine));
  o.proposed_mean = rep.steady_state_mean(0);
  o.proposed_ptp = rep.steady_state_oscillation(0);
  o.proposed_ok = detail::in_band(o.proposed_mean, mine.objective.target(0));
  const Scenario theirs = scenario_defaults("comparison_suttner");
  try {
    const auto b = scenario_report(theirs, simulate_scenario(theirs));
    o.baseline_mean = b.steady_state_mean(0);
    o.baseline_ptp = b.steady_state_oscillation(0);
    o.baseline_ok = detail::in_band(o.baseline_mean, theirs.objective.target(0));
  } catch (const IntegrationError& e) {
    o.baseline_error = e.what();
  }
  return o;
}

inline CriterionResult criterion_comparison() {
  CriterionResult r{10, "baseline comparison", false, ""};
  const ComparisonOutcome o = compare_two_dither();
  std::ostringstream d;
  d << "proposed ptp=" << detail::fmt(o.proposed_ptp) << " mean=" << detail::fmt(o.proposed_mean) << "; two-dither ";
  if (!o.baseline_error.empty()) {
    d << "no steady state (" << o.baseline_error << ")";
  } else {
    d << "ptp=" << detail::fmt(o.baseline_ptp) << " mean=" << detail::fmt(o.baseline_mean);
  }
  const bool ptp_ok = o.proposed_ok && o.baseline_ok && o.proposed_ptp < o.baseline_ptp;
  bool lie_ok = true;
  for (const Scenario& s : {scenario_defaults("comparison_grushkovskaya"), detail::cubic_lie_bracket_scenario()}) {
    const double mean = scenario_report(s, simulate_scenario(s)).steady_state_mean(0);
    lie_ok = lie_ok && detail::in_band(mean, 1.0);
    d << "; " << s.name << " mean=" << detail::fmt(mean);
  }
  r.passed = ptp_ok && lie_ok;
  r.detail = d.str();
  return r;
}

/// Global error of RK4 on dx/dt = x at t = 1.
inline double rk4_exp_error(double dt) {
  auto rhs = [](const Vector& x, double) { return x; };
  Vector x = Vector::Ones(1);
  const auto steps = static_cast<int>(std::lround(1.0 / dt));
  for (int i = 0; i < steps; ++i) x = rk4_step(rhs, x, i * dt, dt);
  return std::abs(x(0) - std::exp(1.0));
}

inline CriterionResult criterion_rk4_order() {
  CriterionResult r{11, "RK4 error ratio under step halving", false, ""};
  const double ratio = rk4_exp_error(0.1) / rk4_exp_error(0.05);
  r.passed = ratio >= tol::kRk4Low && ratio <= tol::kRk4High;
  r.detail = "ratio=" + detail::fmt(ratio) + " (expected in [12, 20])";
  return r;
}

inline const std::vector<std::function<CriterionResult()>>& acceptance_criteria() {
  static const std::vector<std::function<CriterionResult()>> all = {
      criterion_mass_spring, criterion_pendulum,  criterion_flapping,    criterion_cubic,
      criterion_scaling,     criterion_order3,    criterion_brackets,    criterion_lyapunov,
      criterion_dither_mean, criterion_comparison, criterion_rk4_order};
  return all;
}

/// Runs one criterion; unexpected errors count as failures with their message.
inline CriterionResult run_criterion(int id) {
  const auto& all = acceptance_criteria();
  if (id < 1 || id > static_cast<int>(all.size())) throw InvalidArgument("no criterion " + std::to_string(id));
  try {
    return all[static_cast<std::size_t>(id - 1)]();
  } catch (const std::exception& e) {
    return {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
  }
}

inline std::string format_result(const CriterionResult& r) {
  char id[8];
  std::snprintf(id, sizeof id, "%02d", r.id);
  return std::string(r.passed ? "PASS" : "FAIL") + " C" + id + " " + r.title + ": " + r.detail;
}

}  // namespace vibresc
