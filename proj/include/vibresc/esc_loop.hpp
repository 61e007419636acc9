#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "vibresc/core.hpp"

namespace vibresc {

/// The proposed single-dither loop:
///   d/dt [q; qdot; uhat] = [qdot; f(q,qdot) + C·uhat; 0] + [0; A; k·J(q)]·ω·cos(ωt)
class EscClosedLoop {
 public:
  EscClosedLoop(MechanicalSystem system, Objective objective, EscGains gains)
      : system_(std::move(system)), objective_(std::move(objective)), gains_(std::move(gains)) {
    if (gains_.dof() != system_.dof) {
      throw DimensionError("C", "gain vectors have length " + std::to_string(gains_.dof()) +
                                    " but the plant has " + std::to_string(system_.dof) +
                                    " degrees of freedom");
    }
  }

  const MechanicalSystem& system() const noexcept { return system_; }
  const Objective& objective() const noexcept { return objective_; }
  const EscGains& gains() const noexcept { return gains_; }
  std::size_t dof() const noexcept { return system_.dof; }
  Eigen::Index packed_size() const noexcept { return static_cast<Eigen::Index>(2 * system_.dof + 1); }

 private:
  MechanicalSystem system_;
  Objective objective_;
  EscGains gains_;
};

namespace detail {

inline void check_state(const EscClosedLoop& loop, const Vector& x) {
  if (x.size() != loop.packed_size()) {
    throw DimensionError("x", "state has length " + std::to_string(x.size()) + ", expected " +
                                  std::to_string(loop.packed_size()));
  }
}

inline std::string echo(const Vector& x) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(x(i));
  }
  return s + "]";
}

}  // namespace detail

/// Z(x) = [qdot; f(q, qdot) + C·uhat; 0].
inline Vector drift_field(const EscClosedLoop& loop, const Vector& x) {
  detail::check_state(loop, x);
  const auto n = static_cast<Eigen::Index>(loop.dof());
  const Vector q = x.head(n);
  const Vector qdot = x.segment(n, n);
  const Vector f = loop.system().eval(q, qdot);
  if (!f.allFinite()) {
    throw NumericalError("plant drift is not finite at x=" + detail::echo(x));
  }
  Vector out(x.size());
  out.head(n) = qdot;
  out.segment(n, n) = f + loop.gains().C() * x(2 * n);
  out(2 * n) = 0.0;
  return out;
}

/// Direction of the dither field without the time factor: [0; A; k·J(q)].
inline Vector dither_direction(const EscClosedLoop& loop, const Vector& x) {
  detail::check_state(loop, x);
  const auto n = static_cast<Eigen::Index>(loop.dof());
  const double J = loop.objective().eval(x.head(n));
  if (!std::isfinite(J)) {
    throw NumericalError("objective is not finite at x=" + detail::echo(x));
  }
  Vector out = Vector::Zero(x.size());
  out.segment(n, n) = loop.gains().A();
  out(2 * n) = loop.gains().k() * J;
  return out;
}

using Waveform = std::function<double(double phase)>;

inline double cosine_waveform(double phase) { return std::cos(phase); }

/// Y(x, t) with an arbitrary unit waveform in place of cos(ωt). Only the
/// zero-mean check uses anything other than the cosine.
inline Vector dither_field_with(const EscClosedLoop& loop, const Vector& x, double t,
                                const Waveform& waveform) {
  const double w = loop.gains().omega();
  return dither_direction(loop, x) * (w * waveform(w * t));
}

/// Y(x, t) = [0; A; k·J(q)]·ω·cos(ωt).
inline Vector dither_field(const EscClosedLoop& loop, const Vector& x, double t) {
  const double w = loop.gains().omega();
  return dither_direction(loop, x) * (w * std::cos(w * t));
}

inline Vector closed_loop_rhs(const EscClosedLoop& loop, const Vector& x, double t) {
  return drift_field(loop, x) + dither_field(loop, x, t);
}

/// Right-hand side callable for the integrator.
inline auto closed_loop(const EscClosedLoop& loop) {
  return [&loop](const Vector& x, double t) { return closed_loop_rhs(loop, x, t); };
}

/// (1/T)∫₀ᵀ Y(x, t) dt at frozen x, composite trapezoid with `quadrature_steps` panels.
inline Vector dither_mean(const EscClosedLoop& loop, const Vector& x, int quadrature_steps,
                          const Waveform& waveform = cosine_waveform) {
  if (quadrature_steps < 100) {
    throw InvalidArgument("dither_mean needs at least 100 quadrature steps");
  }
  const double T = loop.gains().period();
  const double h = T / quadrature_steps;
  Vector sum = 0.5 * (dither_field_with(loop, x, 0.0, waveform) + dither_field_with(loop, x, T, waveform));
  for (int i = 1; i < quadrature_steps; ++i) {
    sum += dither_field_with(loop, x, i * h, waveform);
  }
  return sum * h / T;
}

/// Applied control u = C·uhat + A·ω·cos(ωt) at state x and time t.
inline Vector applied_control(const EscClosedLoop& loop, const Vector& x, double t) {
  const auto n = static_cast<Eigen::Index>(loop.dof());
  const double w = loop.gains().omega();
  return loop.gains().C() * x(2 * n) + loop.gains().A() * (w * std::cos(w * t));
}

}  // namespace vibresc
