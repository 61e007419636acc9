#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vibresc/core.hpp"

namespace vibresc {

struct TrajectoryMeta {
  double dt = 0.0;
  double omega = 0.0;
  std::string scenario_id;
};

/// Uniformly sampled solution of an ODE in the [q; qdot; uhat] layout.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::size_t dof = 0;
  TrajectoryMeta meta;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  StateVector state(std::size_t i) const { return StateVector::from_packed(states.at(i)); }
};

/// Thrown when a stage evaluation produces a non-finite derivative. Carries
/// the trajectory integrated up to the last good sample, if any.
class IntegrationError : public NumericalError {
 public:
  IntegrationError(double t, int stage, const std::string& what)
      : NumericalError(what), t_(t), stage_(stage) {}

  double time() const noexcept { return t_; }
  int stage() const noexcept { return stage_; }
  const Trajectory& partial() const noexcept { return partial_; }
  void set_partial(Trajectory traj) { partial_ = std::move(traj); }

 private:
  double t_;
  int stage_;
  Trajectory partial_;
};

namespace detail {

inline void check_stage(const Vector& k, double t, int stage) {
  if (!k.allFinite()) {
    throw IntegrationError(t, stage,
                           "non-finite derivative at t=" + std::to_string(t) + " (RK4 stage " +
                               std::to_string(stage) + ")");
  }
}

// Number of fixed steps covering [t0, tf]; ratios within 1e-9 of an integer
// are not bumped by an extra step.
inline std::size_t step_count(double t0, double tf, double dt) {
  const double ratio = (tf - t0) / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

}  // namespace detail

/// Classical fourth-order Runge-Kutta step for dx/dt = rhs(x, t).
template <class Rhs>
Vector rk4_step(Rhs&& rhs, const Vector& x, double t, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const double half = 0.5 * dt;
  const Vector k1 = rhs(x, t);
  detail::check_stage(k1, t, 1);
  const Vector k2 = rhs(Vector(x + half * k1), t + half);
  detail::check_stage(k2, t, 2);
  const Vector k3 = rhs(Vector(x + half * k2), t + half);
  detail::check_stage(k3, t, 3);
  const Vector k4 = rhs(Vector(x + dt * k3), t + dt);
  detail::check_stage(k4, t, 4);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class Rhs>
StateVector rk4_step(Rhs&& rhs, const StateVector& x, double t, double dt) {
  return StateVector::from_packed(rk4_step(std::forward<Rhs>(rhs), x.packed(), t, dt));
}

/// Integrates on the grid t_i = t0 + i·dt and records every step.
template <class Rhs>
Trajectory simulate(Rhs&& rhs, const StateVector& x0, double t0, double tf, double dt,
                    TrajectoryMeta meta = {}) {
  if (!(tf > t0)) {
    throw InvalidArgument("simulation horizon must satisfy tf > t0 (got t0=" + std::to_string(t0) +
                          ", tf=" + std::to_string(tf) + ")");
  }
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!x0.packed().allFinite()) throw InvalidArgument("initial state is not finite");

  const std::size_t steps = detail::step_count(t0, tf, dt);
  meta.dt = dt;
  Trajectory traj;
  traj.dof = x0.dof();
  traj.meta = std::move(meta);
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(t0);
  traj.states.push_back(x0.packed());

  Vector x = x0.packed();
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    try {
      x = rk4_step(rhs, x, t, dt);
      if (!x.allFinite()) throw IntegrationError(t, 0, "state became non-finite at t=" + std::to_string(t));
    } catch (IntegrationError& e) {
      e.set_partial(std::move(traj));
      throw;
    } catch (const NumericalError& e) {
      IntegrationError wrapped(t, 0, std::string(e.what()) + " (at t=" + std::to_string(t) + ")");
      wrapped.set_partial(std::move(traj));
      throw wrapped;
    }
    traj.times.push_back(t0 + static_cast<double>(i + 1) * dt);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace vibresc
