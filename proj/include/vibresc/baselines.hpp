#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vibresc/core.hpp"

namespace vibresc {

/// Lie-bracket ESC with bounded update rates, as used for the mass-spring
/// comparison:
///   u̇ = 2√π/(η√ε)·(√γ·J·cos(ω_b t) + √γ·sin(ω_b t)),  q̈ = f(q, q̇) + u.
/// The dither frequency ω_b is explicit; 2π/(ηε) is only cross-checked.
/// `k` and `mu` are carried for fidelity with the published settings but
/// do not enter the law.
struct LieBracketBaselineParams {
  double gamma = 100.0;
  double eta = 25.0;
  double eps = 1.0 / 12.3;
  double k = 10.0;
  double mu = 5.0;
  double omega = 3.2;

  double derived_frequency() const { return 2.0 * std::numbers::pi / (eta * eps); }
  double amplitude() const { return 2.0 * std::sqrt(std::numbers::pi) / (eta * std::sqrt(eps)); }

  void validate() const {
    if (!(gamma > 0.0 && eta > 0.0 && eps > 0.0 && k > 0.0 && mu > 0.0 && omega > 0.0)) {
      throw InvalidArgument("lie_bracket baseline parameters must all be positive");
    }
    const double derived = derived_frequency();
    if (std::abs(derived - omega) > 0.05 * omega) {
      throw InvalidArgument("lie_bracket baseline: 2*pi/(eta*eps) = " + std::to_string(derived) +
                            " differs from omega = " + std::to_string(omega) + " by more than 5%");
    }
  }
  friend bool operator==(const LieBracketBaselineParams&, const LieBracketBaselineParams&) = default;
};

/// Two-dither ESC for mechanical systems with Y₁ = Y₂ = 1:
///   u₁ = ω·sin(ωt)·λ₁·J + μ₁·α²(J),  u₂ = ω·cos(ωt)·λ₂·α(J) + μ₂·α²(J),
///   α(J) = √(J + log(2·cosh J)).
struct TwoDitherBaselineParams {
  double lambda1 = 14.0;
  double lambda2 = 14.0;
  double mu1 = 14.0;
  double mu2 = 14.0;
  double omega = 50.0;

  void validate() const {
    if (!(lambda1 > 0.0 && lambda2 > 0.0 && mu1 > 0.0 && mu2 > 0.0 && omega > 0.0)) {
      throw InvalidArgument("two_dither baseline parameters must all be positive");
    }
  }
  friend bool operator==(const TwoDitherBaselineParams&, const TwoDitherBaselineParams&) = default;
};

/// log(2·cosh J) without overflow for large |J|.
inline double log_two_cosh(double J) {
  const double a = std::abs(J);
  return a + std::log1p(std::exp(-2.0 * a));
}

// J + log(2·cosh J) = 2·max(J, 0) + log1p(exp(−2|J|)), free of cancellation for J < 0.
inline double two_dither_alpha(double J) {
  return std::sqrt(2.0 * std::max(J, 0.0) + std::log1p(std::exp(-2.0 * std::abs(J))));
}

namespace detail {

inline void require_scalar_plant(const MechanicalSystem& sys, const Vector& x) {
  if (sys.dof != 1) {
    throw DimensionError("plant", "baseline controllers are defined for single-DOF plants only ('" +
                                      sys.name + "' has " + std::to_string(sys.dof) + ")");
  }
  if (x.size() != 3) throw DimensionError("x", "baseline state must be [q, qdot, u]");
}

}  // namespace detail

/// State layout [q, qdot, u]; u is the integrated control.
inline Vector lie_bracket_baseline_rhs(const LieBracketBaselineParams& p, const MechanicalSystem& sys,
                                       const Objective& obj, const Vector& x, double t) {
  detail::require_scalar_plant(sys, x);
  const Vector q = x.head(1);
  const Vector qdot = x.segment(1, 1);
  const double J = obj.eval(q);
  const double sg = std::sqrt(p.gamma);
  Vector dx(3);
  dx(0) = qdot(0);
  dx(1) = sys.eval(q, qdot)(0) + x(2);
  dx(2) = p.amplitude() * (sg * J * std::cos(p.omega * t) + sg * std::sin(p.omega * t));
  return dx;
}

inline double lie_bracket_baseline_control(const Vector& x) { return x(2); }

/// u₁ + u₂ applied along Y₁ = Y₂ = 1.
inline double two_dither_control(const TwoDitherBaselineParams& p, double J, double t) {
  const double a = two_dither_alpha(J);
  const double wt = p.omega * t;
  const double u1 = p.omega * std::sin(wt) * p.lambda1 * J + p.mu1 * a * a;
  const double u2 = p.omega * std::cos(wt) * p.lambda2 * a + p.mu2 * a * a;
  return u1 + u2;
}

/// State layout [q, qdot, 0]; the last slot is unused and stays constant.
inline Vector two_dither_baseline_rhs(const TwoDitherBaselineParams& p, const MechanicalSystem& sys,
                                      const Objective& obj, const Vector& x, double t) {
  detail::require_scalar_plant(sys, x);
  const Vector q = x.head(1);
  const Vector qdot = x.segment(1, 1);
  Vector dx(3);
  dx(0) = qdot(0);
  dx(1) = sys.eval(q, qdot)(0) + two_dither_control(p, obj.eval(q), t);
  dx(2) = 0.0;
  return dx;
}

}  // namespace vibresc
