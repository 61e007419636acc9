#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vibresc/core.hpp"
#include "vibresc/esc_loop.hpp"

namespace vibresc {

using Field = std::function<Vector(const Vector& x)>;
using TimeField = std::function<Vector(const Vector& x, double t)>;

/// Relative step for nested directional differences. The loop fields are
/// polynomial along every direction a bracket differentiates (for quadratic
/// objectives), so the step only trades round-off, not truncation.
inline constexpr double kBracketStep = 1e-2;

/// Relative step for second velocity differences of the drift.
inline constexpr double kHessianStep = 1e-4;

/// Central-difference Jacobian in the packed [q; qdot; uhat] ordering.
/// A non-positive `h` selects 1e-5·(1+|x_j|) per column.
inline Matrix fd_jacobian(const Field& field, const Vector& x, double h = 0.0) {
  const Vector f0 = field(x);
  Matrix jac(f0.size(), x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h > 0.0 ? h : default_fd_step(x(j));
    probe(j) = x(j) + step;
    const Vector plus = field(probe);
    probe(j) = x(j) - step;
    const Vector minus = field(probe);
    probe(j) = x(j);
    if (!plus.allFinite() || !minus.allFinite()) {
      throw NumericalError("field is not finite when perturbing coordinate " + std::to_string(j));
    }
    jac.col(j) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

/// (dF/dx)·v by a central difference whose state perturbation has norm
/// h·(1+‖x‖) regardless of ‖v‖.
inline Vector directional_derivative(const Field& field, const Vector& x, const Vector& v, double h) {
  const double nv = v.norm();
  if (nv == 0.0) return Vector::Zero(field(x).size());
  const double s = h * (1.0 + x.norm()) / nv;
  const Vector plus = field(Vector(x + s * v));
  const Vector minus = field(Vector(x - s * v));
  if (!plus.allFinite() || !minus.allFinite()) {
    throw NumericalError("field is not finite along a bracket direction");
  }
  return (plus - minus) / (2.0 * s);
}

/// [F, G] = (dG/dx)·F − (dF/dx)·G, so that [Y, Z] = (dZ/dx)Y − (dY/dx)Z.
inline Vector lie_bracket(const Field& F, const Field& G, const Vector& x, double h = kBracketStep) {
  return directional_derivative(G, x, F(x), h) - directional_derivative(F, x, G(x), h);
}

inline Vector lie_bracket(const TimeField& F, const TimeField& G, const Vector& x, double t,
                          double h = kBracketStep) {
  const Field f = [&F, t](const Vector& y) { return F(y, t); };
  const Field g = [&G, t](const Vector& y) { return G(y, t); };
  return lie_bracket(f, g, x, h);
}

/// The bracket as a field of its own, for nesting.
inline Field bracket_field(Field F, Field G, double h = kBracketStep) {
  return [F = std::move(F), G = std::move(G), h](const Vector& x) { return lie_bracket(F, G, x, h); };
}

inline Field frozen_drift(const EscClosedLoop& loop) {
  return [&loop](const Vector& x) { return drift_field(loop, x); };
}

inline Field frozen_dither(const EscClosedLoop& loop, double t) {
  return [&loop, t](const Vector& x) { return dither_field(loop, x, t); };
}

namespace detail {

inline void require_smooth(const MechanicalSystem& sys, const Vector& q, const Vector& qdot, double margin) {
  if (auto idx = sys.nonsmooth_at(q, qdot, margin)) {
    throw NonsmoothPointError(*idx, "nonsmooth point: qdot[" + std::to_string(*idx) + "] of '" +
                                        sys.name + "' is within " + std::to_string(margin) +
                                        " of a derivative discontinuity");
  }
}

inline double bracket_margin(const Vector& x, double h, int levels) {
  return 2.0 * levels * h * (1.0 + x.norm());
}

}  // namespace detail

/// df/dqdot, analytic when supplied.
inline Matrix velocity_jacobian(const MechanicalSystem& sys, const Vector& q, const Vector& qdot) {
  if (sys.velocity_jacobian) return sys.velocity_jacobian(q, qdot);
  const Field f = [&sys, &q](const Vector& v) { return sys.eval(q, v); };
  return fd_jacobian(f, qdot);
}

/// Velocity Hessian of f by central second differences, hessian[i](k, j).
inline std::vector<Matrix> fd_velocity_hessian(const MechanicalSystem& sys, const Vector& q,
                                               const Vector& qdot, double rel_step = kHessianStep) {
  const auto n = qdot.size();
  std::vector<Matrix> hess(static_cast<std::size_t>(n), Matrix::Zero(n, n));
  Vector probe = qdot;
  auto f_at = [&](Eigen::Index a, double sa, Eigen::Index b, double sb) {
    probe = qdot;
    probe(a) += sa;
    probe(b) += sb;
    return sys.eval(q, probe);
  };
  for (Eigen::Index k = 0; k < n; ++k) {
    const double hk = rel_step * (1.0 + std::abs(qdot(k)));
    for (Eigen::Index j = k; j < n; ++j) {
      const double hj = rel_step * (1.0 + std::abs(qdot(j)));
      Vector d2;
      if (j == k) {
        probe = qdot;
        const Vector f0 = sys.eval(q, probe);
        probe(k) += hk;
        const Vector fp = sys.eval(q, probe);
        probe(k) = qdot(k) - hk;
        const Vector fm = sys.eval(q, probe);
        d2 = (fp - 2.0 * f0 + fm) / (hk * hk);
      } else {
        d2 = (f_at(k, hk, j, hj) - f_at(k, hk, j, -hj) - f_at(k, -hk, j, hj) + f_at(k, -hk, j, -hj)) /
             (4.0 * hk * hj);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        hess[static_cast<std::size_t>(i)](k, j) = d2(i);
        hess[static_cast<std::size_t>(i)](j, k) = d2(i);
      }
    }
  }
  return hess;
}

enum class HessianSource { analytic, finite_difference };

/// M22(i, k) = Σ_j d²f_i/(dqdot_k dqdot_j)·a_j.
inline Matrix m22(const MechanicalSystem& sys, const Vector& q, const Vector& qdot, const Vector& A,
                  HessianSource source = HessianSource::analytic, double rel_step = kHessianStep,
                  bool check_guard = true) {
  const bool analytic = source == HessianSource::analytic && static_cast<bool>(sys.velocity_hessian);
  if (check_guard) {
    const double h = rel_step * (1.0 + qdot.cwiseAbs().maxCoeff());
    detail::require_smooth(sys, q, qdot, 10.0 * h);
  }
  const std::vector<Matrix> hess = analytic ? sys.velocity_hessian(q, qdot) : fd_velocity_hessian(sys, q, qdot, rel_step);
  const auto n = static_cast<Eigen::Index>(sys.dof);
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = (hess[static_cast<std::size_t>(i)] * A).transpose();
  }
  return out;
}

/// [Y, Z] from its closed form: [A; (df/dqdot)·A + k·J·C; −k·∇J·qdot]·ω·cos(ωt).
inline Vector bracket_yz_closed_form(const EscClosedLoop& loop, const Vector& x, double t) {
  const auto n = static_cast<Eigen::Index>(loop.dof());
  const Vector q = x.head(n);
  const Vector qdot = x.segment(n, n);
  const auto& g = loop.gains();
  const double J = loop.objective().eval(q);
  Vector out(x.size());
  out.head(n) = g.A();
  out.segment(n, n) = velocity_jacobian(loop.system(), q, qdot) * g.A() + g.k() * J * g.C();
  out(2 * n) = -g.k() * objective_gradient(loop.objective(), q).dot(qdot);
  return out * (g.omega() * std::cos(g.omega() * t));
}

/// [Y, [Y, Z]] from its closed form: [0; M22·A; −2k·∇J·A]·ω²·cos²(ωt).
inline Vector bracket_yyz_closed_form(const EscClosedLoop& loop, const Vector& x, double t,
                                      HessianSource source = HessianSource::analytic) {
  const auto n = static_cast<Eigen::Index>(loop.dof());
  const Vector q = x.head(n);
  const Vector qdot = x.segment(n, n);
  const auto& g = loop.gains();
  Vector out = Vector::Zero(x.size());
  out.segment(n, n) = m22(loop.system(), q, qdot, g.A(), source) * g.A();
  out(2 * n) = -2.0 * g.k() * objective_gradient(loop.objective(), q).dot(g.A());
  const double c = g.omega() * std::cos(g.omega() * t);
  return out * (c * c);
}

/// [Y, Z] by finite differences at frozen t.
inline Vector fd_bracket_yz(const EscClosedLoop& loop, const Vector& x, double t, double h = kBracketStep) {
  const auto n = static_cast<Eigen::Index>(loop.dof());
  detail::require_smooth(loop.system(), x.head(n), x.segment(n, n), detail::bracket_margin(x, h, 1));
  return lie_bracket(frozen_dither(loop, t), frozen_drift(loop), x, h);
}

/// [Y, [Y, Z]] by nested finite differences at frozen t.
inline Vector fd_bracket_yyz(const EscClosedLoop& loop, const Vector& x, double t, double h = kBracketStep) {
  const auto n = static_cast<Eigen::Index>(loop.dof());
  detail::require_smooth(loop.system(), x.head(n), x.segment(n, n), detail::bracket_margin(x, h, 2));
  const Field Y = frozen_dither(loop, t);
  return lie_bracket(Y, bracket_field(Y, frozen_drift(loop), h), x, h);
}

struct Order3Residual {
  std::optional<double> residual;  // empty when skipped
  std::string skip_reason;
  double raw_norm = 0.0;           // ‖[Y,[Y,[Y,Z]]]‖
};

/// Size of the third nested bracket, normalized by
/// ω³ + ‖[Y,[Y,Z]]‖·‖Y‖/(1+‖x‖). Vanishes when f is quadratic in qdot.
inline Order3Residual bracket_order3_residual(const EscClosedLoop& loop, const Vector& x, double t,
                                              double h = kBracketStep) {
  const auto n = static_cast<Eigen::Index>(loop.dof());
  Order3Residual out;
  if (auto idx = loop.system().nonsmooth_at(x.head(n), x.segment(n, n), detail::bracket_margin(x, h, 3))) {
    out.skip_reason = "nonsmooth point near qdot[" + std::to_string(*idx) + "]";
    return out;
  }
  const Field Y = frozen_dither(loop, t);
  const Field B1 = bracket_field(Y, frozen_drift(loop), h);
  const Field B2 = bracket_field(Y, B1, h);
  const Vector b3 = lie_bracket(Y, B2, x, h);
  const double w = loop.gains().omega();
  const double scale = w * w * w + B2(x).norm() * Y(x).norm() / (1.0 + x.norm());
  out.raw_norm = b3.norm();
  out.residual = out.raw_norm / scale;
  return out;
}

/// Time-invariant averaged loop: Z(x̄) + factor·[0; M22·A; −2k·∇J(q̄)·A].
struct AveragedLoop {
  EscClosedLoop loop;
  HessianSource hessian_source = HessianSource::analytic;
  double fd_step = kHessianStep;
  // 1/4 from the iterated dither integral; other values exist for mutation tests.
  double correction_factor = 0.25;

  explicit AveragedLoop(EscClosedLoop l, HessianSource src = HessianSource::analytic,
                        double step = kHessianStep)
      : loop(std::move(l)), hessian_source(src), fd_step(step) {}
};

inline Vector averaging_correction(const AveragedLoop& avg, const Vector& xbar) {
  const EscClosedLoop& loop = avg.loop;
  detail::check_state(loop, xbar);
  const auto n = static_cast<Eigen::Index>(loop.dof());
  const Vector q = xbar.head(n);
  const Vector qdot = xbar.segment(n, n);
  const auto& g = loop.gains();
  const bool analytic =
      avg.hessian_source == HessianSource::analytic && static_cast<bool>(loop.system().velocity_hessian);
  Vector out = Vector::Zero(xbar.size());
  out.segment(n, n) = m22(loop.system(), q, qdot, g.A(), avg.hessian_source, avg.fd_step, !analytic) * g.A();
  out(2 * n) = -2.0 * g.k() * objective_gradient(loop.objective(), q).dot(g.A());
  return avg.correction_factor * out;
}

inline Vector averaged_rhs(const AveragedLoop& avg, const Vector& xbar) {
  return drift_field(avg.loop, xbar) + averaging_correction(avg, xbar);
}

inline auto averaged_system(const AveragedLoop& avg) {
  return [&avg](const Vector& x, double) { return averaged_rhs(avg, x); };
}

/// Numerical value of the first series term (1/T)∫₀ᵀ∫₀ᵗ [Y,Z](x, s) ds dt
/// at frozen x, using finite-difference brackets at every quadrature node.
inline Vector first_order_term(const EscClosedLoop& loop, const Vector& x, int steps = 400,
                               double h = kBracketStep) {
  const double T = loop.gains().period();
  const double dt = T / steps;
  std::vector<Vector> inner(static_cast<std::size_t>(steps) + 1);
  inner[0] = Vector::Zero(x.size());
  Vector prev = fd_bracket_yz(loop, x, 0.0, h);
  for (int i = 1; i <= steps; ++i) {
    const Vector cur = fd_bracket_yz(loop, x, i * dt, h);
    inner[static_cast<std::size_t>(i)] = inner[static_cast<std::size_t>(i - 1)] + 0.5 * dt * (prev + cur);
    prev = cur;
  }
  Vector outer = 0.5 * (inner.front() + inner.back());
  for (int i = 1; i < steps; ++i) outer += inner[static_cast<std::size_t>(i)];
  return outer * dt / T;
}

/// (1/T)∫₀ᵀ∫₀ᵗ∫₀^{s₁} ψ(s₁)ψ(s₂) ds₂ ds₁ dt with ψ(s) = ω·cos(ωs), by nested
/// cumulative trapezoids. The exact value is 1/4 for every ω.
inline double iterated_dither_factor(double omega, int steps = 2000) {
  const double T = 2.0 * std::numbers::pi / omega;
  const double h = T / steps;
  auto psi = [omega](double s) { return omega * std::cos(omega * s); };
  // level 1: Ψ(s) = ∫₀ˢ ψ
  std::vector<double> level1(static_cast<std::size_t>(steps) + 1, 0.0);
  for (int i = 1; i <= steps; ++i) {
    level1[static_cast<std::size_t>(i)] = level1[static_cast<std::size_t>(i - 1)] + 0.5 * h * (psi((i - 1) * h) + psi(i * h));
  }
  // level 2: ∫₀ᵗ ψ(s₁)Ψ(s₁) ds₁
  std::vector<double> level2(static_cast<std::size_t>(steps) + 1, 0.0);
  for (int i = 1; i <= steps; ++i) {
    const double a = psi((i - 1) * h) * level1[static_cast<std::size_t>(i - 1)];
    const double b = psi(i * h) * level1[static_cast<std::size_t>(i)];
    level2[static_cast<std::size_t>(i)] = level2[static_cast<std::size_t>(i - 1)] + 0.5 * h * (a + b);
  }
  double outer = 0.5 * (level2.front() + level2.back());
  for (int i = 1; i < steps; ++i) outer += level2[static_cast<std::size_t>(i)];
  return outer * h / T;
}

/// Pushes an averaged state through the exact flow of Y from 0 to t. Y leaves
/// q unchanged, so J(q) is constant along it and the flow is closed-form:
/// qdot += A·sin(ωt), uhat += k·J(q)·sin(ωt).
inline Vector lift_through_dither(const EscClosedLoop& loop, const Vector& xbar, double t) {
  detail::check_state(loop, xbar);
  const auto n = static_cast<Eigen::Index>(loop.dof());
  const auto& g = loop.gains();
  const double s = std::sin(g.omega() * t);
  Vector out = xbar;
  out.segment(n, n) += g.A() * s;
  out(2 * n) += g.k() * loop.objective().eval(xbar.head(n)) * s;
  return out;
}

}  // namespace vibresc
