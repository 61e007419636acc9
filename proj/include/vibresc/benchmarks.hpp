#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vibresc/core.hpp"

namespace vibresc {

enum class Damping { linear, cubic };

struct MassSpringParams {
  double m = 1.0;      // kg
  double alpha = 20.0; // N/m
  double beta = 2.0;   // N·s/m
  Damping damping = Damping::linear;

  void validate() const {
    if (!(m > 0.0)) throw InvalidArgument("mass_spring: m must be positive");
    if (!(alpha >= 0.0)) throw InvalidArgument("mass_spring: alpha must be non-negative");
    if (!(beta >= 0.0)) throw InvalidArgument("mass_spring: beta must be non-negative");
  }
  friend bool operator==(const MassSpringParams&, const MassSpringParams&) = default;
};

struct PendulumParams {
  double m = 1.0;     // kg
  double L = 1.0;     // m
  double g = 9.81;    // m/s^2
  double beta = 10.0; // N·s/m

  void validate() const {
    if (!(m > 0.0)) throw InvalidArgument("pendulum: m must be positive");
    if (!(L > 0.0)) throw InvalidArgument("pendulum: L must be positive");
  }
  friend bool operator==(const PendulumParams&, const PendulumParams&) = default;
};

// Two-DOF hover model in (z, phi). +g enters z̈ directly, so z grows with the
// fall direction; the objective uses z exactly as the equations define it.
struct FlappingParams {
  double I_F = 1.3179e-7;
  double k_d1 = 0.0353739;
  double k_L = 0.000621676;
  double k_d2 = 0.33915;
  double k_d3 = 16.5766;
  double g = 9.81;
  double flap_freq_hz = 26.3;

  void validate() const {
    if (!(I_F > 0.0)) throw InvalidArgument("flapping: I_F must be positive");
    if (!(k_d1 >= 0.0 && k_L >= 0.0 && k_d2 >= 0.0 && k_d3 >= 0.0)) {
      throw InvalidArgument("flapping: aerodynamic coefficients must be non-negative");
    }
    if (!(flap_freq_hz > 0.0)) throw InvalidArgument("flapping: flap_freq_hz must be positive");
  }
  friend bool operator==(const FlappingParams&, const FlappingParams&) = default;
};

inline double sign_or_zero(double v) { return (v > 0.0) - (v < 0.0); }

inline double mass_spring_drift(const MassSpringParams& p, double q, double qdot) {
  const double damping = p.damping == Damping::cubic ? qdot * qdot * qdot : qdot;
  return -(p.alpha / p.m) * q - (p.beta / p.m) * damping;
}

inline double pendulum_drift(const PendulumParams& p, double theta, double thetadot) {
  return (p.g / p.L) * std::sin(theta) - (p.beta / (p.m * p.L)) * thetadot;
}

inline Eigen::Vector2d flapping_drift(const FlappingParams& p, double z, double zdot, double phi, double phidot) {
  (void)z;
  (void)phi;
  const double abs_phidot = std::abs(phidot);
  return {-p.k_d1 * abs_phidot * zdot + p.g - p.k_L * phidot * phidot,
          -p.k_d3 * zdot * phidot - p.k_d2 * abs_phidot * phidot};
}

inline MechanicalSystem make_mass_spring(const MassSpringParams& p) {
  p.validate();
  MechanicalSystem sys;
  sys.name = p.damping == Damping::cubic ? "mass_spring_cubic" : "mass_spring";
  sys.dof = 1;
  sys.drift = [p](const Vector& q, const Vector& qdot) {
    return Vector::Constant(1, mass_spring_drift(p, q(0), qdot(0)));
  };
  sys.velocity_jacobian = [p](const Vector&, const Vector& qdot) {
    const double d = p.damping == Damping::cubic ? 3.0 * qdot(0) * qdot(0) : 1.0;
    return Matrix::Constant(1, 1, -(p.beta / p.m) * d);
  };
  sys.velocity_hessian = [p](const Vector&, const Vector& qdot) {
    const double d = p.damping == Damping::cubic ? 6.0 * qdot(0) : 0.0;
    return std::vector<Matrix>{Matrix::Constant(1, 1, -(p.beta / p.m) * d)};
  };
  return sys;
}

inline MechanicalSystem make_pendulum(const PendulumParams& p) {
  p.validate();
  MechanicalSystem sys;
  sys.name = "pendulum";
  sys.dof = 1;
  sys.drift = [p](const Vector& q, const Vector& qdot) {
    return Vector::Constant(1, pendulum_drift(p, q(0), qdot(0)));
  };
  sys.velocity_jacobian = [p](const Vector&, const Vector&) {
    return Matrix::Constant(1, 1, -p.beta / (p.m * p.L));
  };
  sys.velocity_hessian = [](const Vector&, const Vector&) { return std::vector<Matrix>{Matrix::Zero(1, 1)}; };
  return sys;
}

inline MechanicalSystem make_flapping(const FlappingParams& p) {
  p.validate();
  MechanicalSystem sys;
  sys.name = "flapping";
  sys.dof = 2;
  sys.drift = [p](const Vector& q, const Vector& qdot) -> Vector {
    return flapping_drift(p, q(0), qdot(0), q(1), qdot(1));
  };
  // |phidot| is differentiated with sign(phidot), sign(0) = 0.
  sys.velocity_jacobian = [p](const Vector&, const Vector& qdot) {
    const double zd = qdot(0), pd = qdot(1), s = sign_or_zero(pd);
    Matrix J(2, 2);
    J << -p.k_d1 * std::abs(pd), -p.k_d1 * s * zd - 2.0 * p.k_L * pd,
         -p.k_d3 * pd,           -p.k_d3 * zd - 2.0 * p.k_d2 * std::abs(pd);
    return J;
  };
  sys.velocity_hessian = [p](const Vector&, const Vector& qdot) {
    const double s = sign_or_zero(qdot(1));
    Matrix H1(2, 2), H2(2, 2);
    H1 << 0.0, -p.k_d1 * s,
          -p.k_d1 * s, -2.0 * p.k_L;
    H2 << 0.0, -p.k_d3,
          -p.k_d3, -2.0 * p.k_d2 * s;
    return std::vector<Matrix>{H1, H2};
  };
  sys.nonsmooth_guard = [](const Vector&, const Vector& qdot, double margin) -> std::optional<std::size_t> {
    if (std::abs(qdot(1)) <= margin) return 1;
    return std::nullopt;
  };
  return sys;
}

}  // namespace vibresc
