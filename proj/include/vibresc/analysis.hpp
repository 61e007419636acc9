#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vibresc/core.hpp"
#include "vibresc/integrator.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/simulation.hpp"

namespace vibresc {

struct LyapunovSeries {
  std::vector<double> V;
  std::vector<double> Vdot;
};

/// V = J(q) − J*, V̇ = ∇J(q)·q̇ along the samples.
inline LyapunovSeries lyapunov_series(const Trajectory& traj, const Objective& obj) {
  if (!obj.min_value) throw InvalidArgument("lyapunov_series needs the objective's minimum value J*");
  const auto n = static_cast<Eigen::Index>(traj.dof);
  LyapunovSeries out;
  out.V.reserve(traj.size());
  out.Vdot.reserve(traj.size());
  for (const Vector& x : traj.states) {
    const Vector q = x.head(n);
    out.V.push_back(obj.eval(q) - *obj.min_value);
    out.Vdot.push_back(objective_gradient(obj, q).dot(x.segment(n, n)));
  }
  return out;
}

struct LyapunovCheck {
  double window_start = 0.0;
  double max_vdot = 0.0;                 // after window_start
  std::optional<double> last_violation;  // last time with V̇ > tol
  std::optional<double> first_increase;  // first time V grows
  bool rate_ok = true;
  bool monotone = true;
};

/// Sign of V̇ and monotonicity of V after the first `transient_fraction` of the horizon.
inline LyapunovCheck check_lyapunov(const Trajectory& traj, const LyapunovSeries& s,
                                    double transient_fraction = 0.05, double tol = 1e-9) {
  if (traj.size() < 2) throw InvalidArgument("trajectory needs at least two samples");
  LyapunovCheck c;
  const double t0 = traj.times.front();
  c.window_start = t0 + transient_fraction * (traj.times.back() - t0);
  c.max_vdot = -INFINITY;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < c.window_start) continue;
    c.max_vdot = std::max(c.max_vdot, s.Vdot[i]);
    if (s.Vdot[i] > tol) {
      c.rate_ok = false;
      c.last_violation = traj.times[i];
    }
    if (i > 0 && traj.times[i - 1] >= c.window_start && s.V[i] > s.V[i - 1] + tol * traj.meta.dt) {
      if (c.monotone) c.first_increase = traj.times[i];
      c.monotone = false;
    }
  }
  return c;
}

/// max over the grid of ‖x(t) − x̄(t)‖.
inline double closeness(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.dof != b.dof) {
    throw InvalidArgument("closeness: trajectories have different grids (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + " samples)");
  }
  if (a.empty()) throw InvalidArgument("closeness: empty trajectories");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-12 * (1.0 + std::abs(a.times[i]))) {
      throw InvalidArgument("closeness: time grids differ at sample " + std::to_string(i));
    }
  }
  if (a.states.front() != b.states.front()) throw InvalidArgument("closeness: initial states differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a.states[i] - b.states[i]).norm());
  return worst;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("degenerate fit: all abscissae coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) f.residuals.push_back(y[i] - (f.intercept + f.slope * x[i]));
  return f;
}

struct ScalingOptions {
  double correction_factor = 0.25;
  int jobs = 1;
  bool lift = true;  // compare against the averaged state pushed through the dither flow
};

struct ScalingStudy {
  std::vector<double> omegas;
  std::vector<double> closeness;
  LineFit fit;  // log(closeness) against log(1/ω)
};

inline Scenario with_omega(const Scenario& base, double omega) {
  if (!base.gains) throw InvalidArgument("scaling study needs the proposed controller");
  Scenario s = base;
  s.gains = EscGains(base.gains->C(), base.gains->A(), base.gains->k(), omega);
  s.integration.dt.reset();
  return s;
}

/// Closeness of the true and averaged runs at one dither frequency.
inline double closeness_at(const Scenario& base, double omega, const ScalingOptions& opt = {}) {
  const Scenario s = with_omega(base, omega);
  const Trajectory truth = simulate_scenario(s);
  const Trajectory avg = simulate_averaged(s, opt.correction_factor);
  if (!opt.lift) return closeness(truth, avg);
  const EscClosedLoop loop = make_loop(s);
  return closeness(truth, lift_trajectory(loop, avg));
}

inline ScalingStudy epsilon_scaling_study(const Scenario& base, const std::vector<double>& omegas,
                                          const ScalingOptions& opt = {}) {
  const std::set<double> distinct(omegas.begin(), omegas.end());
  if (distinct.size() < 2) throw InvalidArgument("degenerate fit: need at least two distinct frequencies");
  for (double w : omegas) {
    if (!(w > 0.0)) throw InvalidArgument("frequencies must be positive");
  }
  if (distinct.size() < 4 || *distinct.rbegin() < 8.0 * *distinct.begin()) {
    throw InvalidArgument("scaling study needs at least 4 frequencies spanning a factor of 8");
  }
  ScalingStudy out;
  out.omegas = omegas;
  out.closeness.resize(omegas.size());
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, opt.jobs));
  for (std::size_t start = 0; start < omegas.size(); start += jobs) {
    std::vector<std::future<double>> batch;
    const std::size_t stop = std::min(omegas.size(), start + jobs);
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                 [&base, &opt, w = omegas[i]] { return closeness_at(base, w, opt); }));
    }
    for (std::size_t i = start; i < stop; ++i) out.closeness[i] = batch[i - start].get();
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!(out.closeness[i] > 0.0)) throw NumericalError("closeness is zero; cannot take its logarithm");
    lx.push_back(std::log(1.0 / omegas[i]));
    ly.push_back(std::log(out.closeness[i]));
  }
  out.fit = least_squares_line(lx, ly);
  return out;
}

/// Inclusive sample range of the last `duration` seconds of the run, shortened to whole periods ending at
/// tf when a period is given.
inline std::pair<std::size_t, std::size_t> final_window(const std::vector<double>& times, double duration,
                                                        std::optional<double> period = std::nullopt) {
  if (times.size() < 2) throw InvalidArgument("trajectory needs at least two samples");
  const double span = times.back() - times.front();
  if (!(duration > 0.0) || !(duration < span)) {
    throw InvalidArgument("final window must be positive and shorter than the trajectory span");
  }
  if (period) {
    const double whole = std::floor(duration / *period + 1e-9);
    if (whole < 1.0) throw InvalidArgument("final window is shorter than one period");
    duration = whole * *period;
  }
  const double from = times.back() - duration;
  const double slack = 1e-9 * (1.0 + std::abs(from));
  const auto it = std::lower_bound(times.begin(), times.end(), from - slack);
  return {static_cast<std::size_t>(it - times.begin()), times.size() - 1};
}

/// Trapezoidal time mean of `values` over samples [begin, end].
inline double time_mean(const std::vector<double>& times, const std::vector<double>& values, std::size_t begin,
                        std::size_t end) {
  if (end <= begin) return values.at(begin);
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += 0.5 * (values[i] + values[i + 1]) * (times[i + 1] - times[i]);
  return acc / (times[end] - times[begin]);
}

/// Means over consecutive periods [t0 + kT, t0 + (k+1)T] fully inside the run.
inline std::vector<double> period_means(const std::vector<double>& times, const std::vector<double>& values,
                                        double period) {
  if (times.size() < 2) throw InvalidArgument("series needs at least two samples");
  std::vector<double> cumulative(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
  }
  auto integral_at = [&](double t) {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t j = static_cast<std::size_t>(it - times.begin());
    if (j == 0) return 0.0;
    if (j >= times.size()) return cumulative.back();
    const std::size_t i = j - 1;
    const double h = times[j] - times[i];
    const double s = (t - times[i]) / h;
    // exact trapezoid area of the linear interpolant up to t
    const double vt = values[i] + s * (values[j] - values[i]);
    return cumulative[i] + 0.5 * (values[i] + vt) * (t - times[i]);
  };
  std::vector<double> out;
  const double t0 = times.front();
  for (std::size_t k = 0;; ++k) {
    const double a = t0 + static_cast<double>(k) * period;
    const double b = a + period;
    if (b > times.back() + 1e-9 * period) break;
    out.push_back((integral_at(b) - integral_at(a)) / period);
  }
  return out;
}

struct ConvergenceReport {
  std::optional<double> settling_time;
  Vector steady_state_mean;
  Vector steady_state_oscillation;  // peak-to-peak
  double uhat_steady_mean = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

/// Steady-state statistics over the final window. `tracked` selects the
/// coordinates used for settling (all by default).
inline ConvergenceReport convergence_report(const Trajectory& traj, const Vector& target, double band = 0.05,
                                            std::optional<double> window = std::nullopt,
                                            std::optional<double> period = std::nullopt,
                                            std::optional<std::vector<bool>> tracked = std::nullopt) {
  if (traj.size() < 2) throw InvalidArgument("trajectory needs at least two samples");
  const auto n = static_cast<Eigen::Index>(traj.dof);
  if (target.size() != n) throw DimensionError("target", "target length does not match the trajectory");
  if (!(band > 0.0)) throw InvalidArgument("band must be positive");
  const double span = traj.times.back() - traj.times.front();
  const double duration = window ? *window : 0.1 * span;
  if (period && duration < 10.0 * *period * (1.0 - 1e-9)) {
    throw InvalidArgument("final window must cover at least 10 dither periods");
  }
  const auto [b, e] = final_window(traj.times, duration, period);
  ConvergenceReport r;
  r.window_start = traj.times[b];
  r.window_end = traj.times[e];
  r.steady_state_mean.resize(n);
  r.steady_state_oscillation.resize(n);
  std::vector<double> col(traj.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < traj.size(); ++i) col[i] = traj.states[i](k);
    r.steady_state_mean(k) = time_mean(traj.times, col, b, e);
    const auto [lo, hi] = std::minmax_element(col.begin() + static_cast<std::ptrdiff_t>(b),
                                              col.begin() + static_cast<std::ptrdiff_t>(e) + 1);
    r.steady_state_oscillation(k) = *hi - *lo;
  }
  for (std::size_t i = 0; i < traj.size(); ++i) col[i] = traj.states[i](2 * n);
  r.uhat_steady_mean = time_mean(traj.times, col, b, e);

  auto inside = [&](std::size_t i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (tracked && !(*tracked)[static_cast<std::size_t>(k)]) continue;
      if (!(std::abs(traj.states[i](k) - target(k)) < band)) return false;
    }
    return true;
  };
  std::size_t i = traj.size();
  while (i > 0 && inside(i - 1)) --i;
  if (i < traj.size()) r.settling_time = traj.times[i] - traj.times.front();
  return r;
}

/// Coordinates the objective actually depends on.
inline std::vector<bool> tracked_coordinates(const Scenario& s) {
  std::vector<bool> out(s.dof(), true);
  if (s.objective.weights) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*s.objective.weights)(static_cast<Eigen::Index>(i)) > 0.0;
  }
  return out;
}

inline ConvergenceReport scenario_report(const Scenario& s, const Trajectory& traj, double band = 0.05) {
  return convergence_report(traj, s.objective.target, band, std::nullopt, s.period(), tracked_coordinates(s));
}

struct ControlEffort {
  double window_mean_norm = 0.0;  // ‖mean of u over the final window‖
  double peak_period_mean = 0.0;  // max over periods of ‖per-period mean of u‖
};

/// Time-averaged applied input, for "average control about zero" checks.
inline ControlEffort control_effort(const Scenario& s, const Trajectory& traj) {
  const Objective obj = make_objective(s.objective);
  const double T = s.period();
  const auto [b, e] = final_window(traj.times, 0.1 * (traj.times.back() - traj.times.front()), T);
  std::vector<std::vector<double>> channels;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vector u = applied_input_vector(s, obj, traj.states[i], traj.times[i]);
    if (channels.empty()) channels.resize(static_cast<std::size_t>(u.size()));
    for (Eigen::Index k = 0; k < u.size(); ++k) channels[static_cast<std::size_t>(k)].push_back(u(k));
  }
  ControlEffort out;
  double sq = 0.0;
  std::vector<double> peak_sq;
  for (const auto& ch : channels) {
    const double m = time_mean(traj.times, ch, b, e);
    sq += m * m;
    const auto pm = period_means(traj.times, ch, T);
    if (peak_sq.empty()) peak_sq.assign(pm.size(), 0.0);
    for (std::size_t j = 0; j < pm.size(); ++j) peak_sq[j] += pm[j] * pm[j];
  }
  out.window_mean_norm = std::sqrt(sq);
  for (double v : peak_sq) out.peak_period_mean = std::max(out.peak_period_mean, std::sqrt(v));
  return out;
}

}  // namespace vibresc
