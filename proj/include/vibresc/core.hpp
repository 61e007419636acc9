#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vibresc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. The CLI maps each family onto a stable exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what) : Error(what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class NonsmoothPointError : public NumericalError {
 public:
  NonsmoothPointError(std::size_t velocity_index, const std::string& what)
      : NumericalError(what), index_(velocity_index) {}
  std::size_t velocity_index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// The ESC state x = [q; qdot; uhat] for an n degree-of-freedom plant.
///
/// Packed storage always has length 2n+1 in exactly that order; every
/// Jacobian in the library uses the same ordering.
class StateVector {
 public:
  StateVector() = default;

  static StateVector from_packed(Vector packed) {
    if (packed.size() < 3 || packed.size() % 2 == 0) {
      throw DimensionError("x", "packed state length " + std::to_string(packed.size()) +
                                    " is not of the form 2n+1 with n >= 1");
    }
    StateVector s;
    s.dof_ = static_cast<std::size_t>((packed.size() - 1) / 2);
    s.data_ = std::move(packed);
    return s;
  }

  std::size_t dof() const noexcept { return dof_; }
  Eigen::Index size() const noexcept { return data_.size(); }

  auto q() const { return data_.head(static_cast<Eigen::Index>(dof_)); }
  auto qdot() const { return data_.segment(static_cast<Eigen::Index>(dof_), static_cast<Eigen::Index>(dof_)); }
  double uhat() const { return data_(static_cast<Eigen::Index>(2 * dof_)); }

  const Vector& packed() const noexcept { return data_; }

  friend bool operator==(const StateVector& a, const StateVector& b) {
    return a.dof_ == b.dof_ && a.data_ == b.data_;
  }

 private:
  std::size_t dof_ = 0;
  Vector data_;
};

inline StateVector pack(const Vector& q, const Vector& qdot, double uhat) {
  if (q.size() == 0) {
    throw DimensionError("q", "q must have at least one entry");
  }
  if (qdot.size() != q.size()) {
    throw DimensionError("qdot", "qdot has length " + std::to_string(qdot.size()) +
                                     ", expected " + std::to_string(q.size()) + " to match q");
  }
  const Eigen::Index n = q.size();
  Vector x(2 * n + 1);
  x << q, qdot, uhat;
  return StateVector::from_packed(std::move(x));
}

struct Unpacked {
  Vector q;
  Vector qdot;
  double uhat = 0.0;
};

inline Unpacked unpack(const StateVector& x) { return {x.q(), x.qdot(), x.uhat()}; }

/// q̈ = f(q, q̇) + u. Optional analytic derivatives of f with respect to the
/// velocities; missing ones are replaced by finite differences downstream.
struct MechanicalSystem {
  using Drift = std::function<Vector(const Vector& q, const Vector& qdot)>;
  using VelocityJacobian = std::function<Matrix(const Vector& q, const Vector& qdot)>;
  // hessian[i](k, j) = d^2 f_i / (d qdot_k d qdot_j)
  using VelocityHessian = std::function<std::vector<Matrix>(const Vector& q, const Vector& qdot)>;
  // Returns the offending velocity index when the state lies within `margin`
  // of a point where f is not twice differentiable in qdot.
  using NonsmoothGuard =
      std::function<std::optional<std::size_t>(const Vector& q, const Vector& qdot, double margin)>;

  std::string name;
  std::size_t dof = 0;
  Drift drift;
  VelocityJacobian velocity_jacobian;
  VelocityHessian velocity_hessian;
  NonsmoothGuard nonsmooth_guard;

  Vector eval(const Vector& q, const Vector& qdot) const {
    Vector out = drift(q, qdot);
    if (static_cast<std::size_t>(out.size()) != dof) {
      throw DimensionError("drift", "drift of '" + name + "' returned length " +
                                        std::to_string(out.size()) + ", expected " +
                                        std::to_string(dof));
    }
    return out;
  }

  std::optional<std::size_t> nonsmooth_at(const Vector& q, const Vector& qdot, double margin) const {
    if (!nonsmooth_guard) return std::nullopt;
    return nonsmooth_guard(q, qdot, margin);
  }
};

/// Objective J(q). Depends on the generalized coordinates only.
struct Objective {
  std::function<double(const Vector& q)> eval;
  std::function<Vector(const Vector& q)> gradient;  // optional
  std::optional<Vector> minimizer;                   // diagnostics only
  std::optional<double> min_value;

  double operator()(const Vector& q) const { return eval(q); }
};

inline Objective quadratic_objective(Vector target) {
  if (!target.allFinite()) {
    throw InvalidArgument("quadratic objective target must be finite");
  }
  Objective obj;
  obj.eval = [target](const Vector& q) { return (q - target).squaredNorm(); };
  obj.gradient = [target](const Vector& q) -> Vector { return 2.0 * (q - target); };
  obj.minimizer = target;
  obj.min_value = 0.0;
  return obj;
}

/// Σᵢ wᵢ·(qᵢ − targetᵢ)². Zero weights drop a coordinate from the objective.
inline Objective weighted_quadratic_objective(Vector target, Vector weights) {
  if (!target.allFinite()) {
    throw InvalidArgument("quadratic objective target must be finite");
  }
  if (weights.size() != target.size()) {
    throw DimensionError("weights", "weights must match the target length");
  }
  if (!(weights.array() >= 0.0).all() || !(weights.array() > 0.0).any()) {
    throw InvalidArgument("objective weights must be non-negative with at least one positive entry");
  }
  Objective obj;
  obj.eval = [target, weights](const Vector& q) {
    return (weights.array() * (q - target).array().square()).sum();
  };
  obj.gradient = [target, weights](const Vector& q) -> Vector {
    return 2.0 * (weights.array() * (q - target).array()).matrix();
  };
  obj.minimizer = target;
  obj.min_value = 0.0;
  return obj;
}

inline double default_fd_step(double value) { return 1e-5 * (1.0 + std::abs(value)); }

/// Central-difference gradient. A non-positive `h` selects the default
/// relative step 1e-5·(1+|q_i|) per coordinate.
inline Vector fd_gradient(const Objective& obj, const Vector& q, double h = 0.0) {
  Vector grad(q.size());
  Vector probe = q;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double step = h > 0.0 ? h : default_fd_step(q(i));
    probe(i) = q(i) + step;
    const double plus = obj.eval(probe);
    probe(i) = q(i) - step;
    const double minus = obj.eval(probe);
    probe(i) = q(i);
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericalError("objective is not finite near q[" + std::to_string(i) + "]");
    }
    grad(i) = (plus - minus) / (2.0 * step);
  }
  return grad;
}

/// Analytic gradient when the objective carries one, finite differences otherwise.
inline Vector objective_gradient(const Objective& obj, const Vector& q) {
  return obj.gradient ? obj.gradient(q) : fd_gradient(obj, q);
}

/// Dither and adaptation gains of the single-dither loop.
class EscGains {
 public:
  EscGains(Vector C, Vector A, double k, double omega)
      : C_(std::move(C)), A_(std::move(A)), k_(k), omega_(omega) {
    if (C_.size() == 0 || C_.size() != A_.size()) {
      throw DimensionError("A", "C and A must be non-empty and of equal length (got " +
                                    std::to_string(C_.size()) + " and " +
                                    std::to_string(A_.size()) + ")");
    }
    if (!(C_.array() > 0.0).all() || !C_.allFinite()) {
      throw InvalidArgument("C must be positive");
    }
    if (!(A_.array() > 0.0).all() || !A_.allFinite()) {
      throw InvalidArgument("A must be positive");
    }
    if (!(k_ > 0.0) || !std::isfinite(k_)) throw InvalidArgument("k must be positive");
    if (!(omega_ > 0.0) || !std::isfinite(omega_)) throw InvalidArgument("omega must be positive");
  }

  const Vector& C() const noexcept { return C_; }
  const Vector& A() const noexcept { return A_; }
  double k() const noexcept { return k_; }
  double omega() const noexcept { return omega_; }
  double period() const noexcept { return 2.0 * std::numbers::pi / omega_; }
  double epsilon() const noexcept { return 1.0 / omega_; }
  std::size_t dof() const noexcept { return static_cast<std::size_t>(C_.size()); }

  friend bool operator==(const EscGains& a, const EscGains& b) {
    return a.C_ == b.C_ && a.A_ == b.A_ && a.k_ == b.k_ && a.omega_ == b.omega_;
  }

 private:
  Vector C_;
  Vector A_;
  double k_;
  double omega_;
};

}  // namespace vibresc
