#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vibresc/benchmarks.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/voc_averaging.hpp"

using namespace vibresc;
using vt::vec;

TEST(MassSpring, DriftValues) {
  const MassSpringParams p;
  EXPECT_DOUBLE_EQ(mass_spring_drift(p, 3.0, 0.0), -60.0);
  EXPECT_DOUBLE_EQ(mass_spring_drift(p, 0.0, 0.0), 0.0);
  MassSpringParams c;
  c.damping = Damping::cubic;
  EXPECT_DOUBLE_EQ(mass_spring_drift(c, 0.0, 2.0), -16.0);
}

TEST(MassSpring, RejectsBadParameters) {
  MassSpringParams p;
  p.m = 0.0;
  EXPECT_THROW(make_mass_spring(p), InvalidArgument);
  p = {};
  p.beta = -1.0;
  EXPECT_THROW(make_mass_spring(p), InvalidArgument);
}

TEST(Pendulum, DriftValues) {
  const PendulumParams p;
  EXPECT_DOUBLE_EQ(pendulum_drift(p, 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(pendulum_drift(p, std::numbers::pi / 2, 0.0), 9.81);
  EXPECT_NEAR(pendulum_drift(p, 2.0, 1.0), -1.07979224284, 1e-10);
}

TEST(Flapping, DriftValues) {
  const FlappingParams p;
  const Eigen::Vector2d rest = flapping_drift(p, 0.0, 0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(rest(0), 9.81);
  EXPECT_DOUBLE_EQ(rest(1), 0.0);
  const Eigen::Vector2d spin = flapping_drift(p, 0.0, 0.0, 0.0, 100.0);
  EXPECT_NEAR(spin(0), 3.59324, 1e-9);
  EXPECT_NEAR(spin(1), -3391.5, 1e-9);
}

TEST(Flapping, VelocityRowSymmetries) {
  const FlappingParams p;
  for (double pd : {0.5, 3.0, 120.0}) {
    const Eigen::Vector2d a = flapping_drift(p, 0.0, 0.0, 0.0, pd), b = flapping_drift(p, 0.0, 0.0, 0.0, -pd);
    EXPECT_DOUBLE_EQ(a(1), -b(1));
    EXPECT_DOUBLE_EQ(a(0), b(0));
  }
}

TEST(Jacobians, AnalyticMatchesFiniteDifferences) {
  vt::Gen gen(41);
  for (const char* name : {"mass_spring", "mass_spring_cubic", "pendulum", "flapping"}) {
    const auto sys = make_system(scenario_defaults(name).plant);
    const auto n = static_cast<Eigen::Index>(sys.dof);
    for (int i = 0; i < 10; ++i) {
      const Vector q = gen.vector(n, -2.0, 2.0);
      Vector qd = gen.vector(n, -3.0, 3.0);
      if (n == 2) qd(1) = gen.uniform(5.0, 50.0);
      const Matrix J = sys.velocity_jacobian(q, qd);
      const Field f = [&](const Vector& v) { return sys.eval(q, v); };
      EXPECT_LT((J - fd_jacobian(f, qd)).norm(), 1e-6 * (1.0 + J.norm())) << name;
      const auto H = sys.velocity_hessian(q, qd), Hf = fd_velocity_hessian(sys, q, qd);
      for (std::size_t k = 0; k < H.size(); ++k) EXPECT_LT((H[k] - Hf[k]).norm(), 1e-4 * (1.0 + H[k].norm())) << name;
    }
  }
}

TEST(Flapping, GuardFlagsSmallFlappingRate) {
  const auto sys = make_flapping({});
  EXPECT_EQ(sys.nonsmooth_at(vec({0.0, 0.0}), vec({1.0, 1e-4}), 1e-3), std::optional<std::size_t>(1));
  EXPECT_FALSE(sys.nonsmooth_at(vec({0.0, 0.0}), vec({1.0, 0.5}), 1e-3));
}

TEST(ScenarioDefaults, PublishedParameters) {
  const auto ms = scenario_defaults("mass_spring");
  EXPECT_EQ(*ms.gains, EscGains(vec({3.0}), vec({0.3}), 5.0, 50.0));
  EXPECT_EQ(ms.initial_state.packed(), vec({3.0, 0.0, 0.0}));
  EXPECT_EQ(ms.objective.target, vec({1.0}));

  const auto pe = scenario_defaults("pendulum");
  EXPECT_EQ(*pe.gains, EscGains(vec({1.0}), vec({0.5}), 2.0, 50.0));
  EXPECT_EQ(pe.initial_state.packed(), Vector::Zero(3));
  EXPECT_EQ(pe.objective.target, vec({2.0}));

  const auto fl = scenario_defaults("flapping");
  EXPECT_NEAR(fl.gains->omega(), 165.25, 5e-3);
  EXPECT_DOUBLE_EQ(fl.gains->omega(), 2.0 * std::numbers::pi * 26.3);
  EXPECT_EQ(fl.gains->C(), vec({0.15, 1.0}));
  EXPECT_DOUBLE_EQ(fl.gains->A()(0), 5.322e-13 / 1.3179e-7);
  EXPECT_DOUBLE_EQ(fl.gains->A()(1), 2.575e-5 / 1.3179e-7);
  EXPECT_DOUBLE_EQ(fl.gains->k(), 7120.0);
  EXPECT_EQ(fl.initial_state.packed(), Vector::Zero(5));

  const auto cubic = scenario_defaults("mass_spring_cubic");
  EXPECT_EQ(std::get<MassSpringParams>(cubic.plant).damping, Damping::cubic);

  const auto gr = scenario_defaults("comparison_grushkovskaya");
  EXPECT_EQ(gr.controller, ControllerKind::lie_bracket_baseline);
  EXPECT_EQ(gr.initial_state.packed(), vec({1.68, -1.0, 0.0}));
  const auto su = scenario_defaults("comparison_suttner");
  EXPECT_EQ(su.controller, ControllerKind::two_dither_baseline);
  EXPECT_EQ(su.initial_state.packed(), vec({3.0, -1.0, 0.0}));
}

TEST(ScenarioDefaults, FlappingObjectiveIgnoresWingAngle) {
  const auto fl = scenario_defaults("flapping");
  const Objective J = make_objective(fl.objective);
  EXPECT_DOUBLE_EQ(J(vec({1.0, 0.7})), 0.0);
  EXPECT_DOUBLE_EQ(J(vec({3.0, -2.0})), 4.0);
}

TEST(ScenarioDefaults, UnknownNameListsValidNames) {
  try {
    scenario_defaults("cartpole");
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    for (const auto& n : scenario_names()) EXPECT_NE(msg.find(n), std::string::npos) << n;
  }
}

TEST(ScenarioDefaults, AllValidate) {
  for (const auto& n : scenario_names()) EXPECT_NO_THROW(validate(scenario_defaults(n))) << n;
}
