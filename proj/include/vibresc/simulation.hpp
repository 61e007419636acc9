#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vibresc/baselines.hpp"
#include "vibresc/core.hpp"
#include "vibresc/esc_loop.hpp"
#include "vibresc/integrator.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/voc_averaging.hpp"

namespace vibresc {

/// Runs the scenario's controller on its plant with fixed-step RK4.
inline Trajectory simulate_scenario(const Scenario& s) {
  validate(s);
  const MechanicalSystem sys = make_system(s.plant);
  const Objective obj = make_objective(s.objective);
  const TrajectoryMeta meta{0.0, s.omega(), s.name};
  const auto& in = s.integration;
  switch (s.controller) {
    case ControllerKind::proposed: {
      const EscClosedLoop loop(sys, obj, *s.gains);
      return simulate(closed_loop(loop), s.initial_state, in.t0, in.tf, s.dt(), meta);
    }
    case ControllerKind::lie_bracket_baseline: {
      const auto& p = *s.lie_bracket;
      auto rhs = [&](const Vector& x, double t) { return lie_bracket_baseline_rhs(p, sys, obj, x, t); };
      return simulate(rhs, s.initial_state, in.t0, in.tf, s.dt(), meta);
    }
    case ControllerKind::two_dither_baseline: {
      const auto& p = *s.two_dither;
      auto rhs = [&](const Vector& x, double t) { return two_dither_baseline_rhs(p, sys, obj, x, t); };
      return simulate(rhs, s.initial_state, in.t0, in.tf, s.dt(), meta);
    }
  }
  throw InvalidArgument("unknown controller");
}

/// The averaged system from the same initial state and on the same grid as
/// the true run. Only defined for the proposed controller.
inline Trajectory simulate_averaged(const Scenario& s, double correction_factor = 0.25) {
  validate(s);
  if (s.controller != ControllerKind::proposed) {
    throw InvalidArgument("averaged dynamics are only available for the proposed controller");
  }
  AveragedLoop avg(make_loop(s));
  avg.correction_factor = correction_factor;
  const auto& in = s.integration;
  return simulate(averaged_system(avg), s.initial_state, in.t0, in.tf, s.dt(),
                  TrajectoryMeta{0.0, s.omega(), s.name + "_averaged"});
}

/// Averaged samples pushed through the dither flow at their own times.
inline Trajectory lift_trajectory(const EscClosedLoop& loop, const Trajectory& avg) {
  Trajectory out = avg;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.states[i] = lift_through_dither(loop, avg.states[i], avg.times[i]);
  }
  return out;
}

struct DerivedSignals {
  std::vector<double> J;
  std::vector<double> V;
  std::vector<double> Vdot;
  std::vector<double> u_applied;  // first input channel
};

/// First channel of the input actually applied to the plant at sample x, t.
/// `averaged` drops the dither, leaving C·uhat.
inline double applied_input(const Scenario& s, const Objective& obj, const Vector& x, double t, bool averaged) {
  const auto n = static_cast<Eigen::Index>(s.dof());
  switch (s.controller) {
    case ControllerKind::proposed: {
      const auto& g = *s.gains;
      const double dither = averaged ? 0.0 : g.A()(0) * g.omega() * std::cos(g.omega() * t);
      return g.C()(0) * x(2 * n) + dither;
    }
    case ControllerKind::lie_bracket_baseline: return lie_bracket_baseline_control(x);
    case ControllerKind::two_dither_baseline: return two_dither_control(*s.two_dither, obj.eval(x.head(n)), t);
  }
  return 0.0;
}

/// Full applied input vector; baselines act on a single channel.
inline Vector applied_input_vector(const Scenario& s, const Objective& obj, const Vector& x, double t) {
  if (s.controller == ControllerKind::proposed) {
    const auto& g = *s.gains;
    const auto n = static_cast<Eigen::Index>(s.dof());
    return g.C() * x(2 * n) + g.A() * (g.omega() * std::cos(g.omega() * t));
  }
  return Vector::Constant(1, applied_input(s, obj, x, t, false));
}

inline DerivedSignals derive_signals(const Scenario& s, const Trajectory& traj, bool averaged = false) {
  const Objective obj = make_objective(s.objective);
  if (!obj.min_value) throw InvalidArgument("objective has no minimum value");
  const auto n = static_cast<Eigen::Index>(s.dof());
  DerivedSignals d;
  d.J.reserve(traj.size());
  d.V.reserve(traj.size());
  d.Vdot.reserve(traj.size());
  d.u_applied.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vector& x = traj.states[i];
    const Vector q = x.head(n);
    const double J = obj.eval(q);
    d.J.push_back(J);
    d.V.push_back(J - *obj.min_value);
    d.Vdot.push_back(objective_gradient(obj, q).dot(x.segment(n, n)));
    d.u_applied.push_back(applied_input(s, obj, x, traj.times[i], averaged));
  }
  return d;
}

/// The purely oscillatory part of the selected controller's vector field at
/// frozen x, in the scenario's state layout.
inline Vector scenario_dither(const Scenario& s, const Vector& x, double t) {
  const MechanicalSystem sys = make_system(s.plant);
  const Objective obj = make_objective(s.objective);
  switch (s.controller) {
    case ControllerKind::proposed:
      return dither_field(EscClosedLoop(sys, obj, *s.gains), x, t);
    case ControllerKind::lie_bracket_baseline: {
      const auto& p = *s.lie_bracket;
      const double sg = std::sqrt(p.gamma);
      Vector out = Vector::Zero(3);
      out(2) = p.amplitude() * (sg * obj.eval(x.head(1)) * std::cos(p.omega * t) + sg * std::sin(p.omega * t));
      return out;
    }
    case ControllerKind::two_dither_baseline: {
      const auto& p = *s.two_dither;
      const double J = obj.eval(x.head(1));
      Vector out = Vector::Zero(3);
      out(1) = p.omega * std::sin(p.omega * t) * p.lambda1 * J +
               p.omega * std::cos(p.omega * t) * p.lambda2 * two_dither_alpha(J);
      return out;
    }
  }
  throw InvalidArgument("unknown controller");
}

/// Period mean of scenario_dither at frozen x (composite trapezoid).
inline Vector scenario_dither_mean(const Scenario& s, const Vector& x, int steps = 400) {
  if (steps < 100) throw InvalidArgument("dither mean needs at least 100 quadrature steps");
  const double T = s.period();
  const double h = T / steps;
  Vector sum = 0.5 * (scenario_dither(s, x, 0.0) + scenario_dither(s, x, T));
  for (int i = 1; i < steps; ++i) sum += scenario_dither(s, x, i * h);
  return sum * h / T;
}

}  // namespace vibresc
