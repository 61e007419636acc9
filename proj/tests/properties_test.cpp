// Randomized invariants with fixed seeds.
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vibresc/vibresc.hpp"

using namespace vibresc;

namespace {

constexpr int kTrials = 200;

MechanicalSystem random_plant(vt::Gen& g, std::string& name) {
  switch (g.integer(0, 2)) {
    case 0: {
      MassSpringParams p;
      p.m = g.uniform(0.5, 3.0);
      p.alpha = g.uniform(1.0, 30.0);
      p.beta = g.uniform(0.1, 5.0);
      p.damping = g.integer(0, 1) ? Damping::cubic : Damping::linear;
      name = "mass_spring";
      return make_mass_spring(p);
    }
    case 1: {
      PendulumParams p;
      p.m = g.uniform(0.5, 3.0);
      p.L = g.uniform(0.5, 3.0);
      p.beta = g.uniform(0.1, 5.0);
      name = "pendulum";
      return make_pendulum(p);
    }
    default:
      name = "flapping";
      return make_flapping(FlappingParams{});
  }
}

}  // namespace

TEST(Properties, PackUnpackRoundTrip) {
  vt::Gen g(11);
  for (int trial = 0; trial < kTrials; ++trial) {
    const Eigen::Index n = g.integer(1, 5);
    const Vector q = g.vector(n, -10, 10), qd = g.vector(n, -10, 10);
    const double u = g.uniform(-10, 10);
    const StateVector x = pack(q, qd, u);
    ASSERT_EQ(x.size(), 2 * n + 1);
    const Unpacked back = unpack(x);
    EXPECT_EQ(back.q, q);
    EXPECT_EQ(back.qdot, qd);
    EXPECT_EQ(back.uhat, u);
    EXPECT_EQ(StateVector::from_packed(x.packed()), x);
  }
}

TEST(Properties, FieldsKeepThePackedLayout) {
  vt::Gen g(12);
  for (int trial = 0; trial < kTrials; ++trial) {
    std::string name;
    MechanicalSystem sys = random_plant(g, name);
    const auto n = static_cast<Eigen::Index>(sys.dof);
    const EscClosedLoop loop(sys, quadratic_objective(g.vector(n, -2, 2)),
                             EscGains(g.vector(n, 1, 20), g.vector(n, 0.1, 1), g.uniform(0.5, 10), g.uniform(20, 200)));
    const Vector x = g.vector(2 * n + 1, -2, 2);
    const double t = g.uniform(0, 10);
    const Vector z = drift_field(loop, x), y = dither_field(loop, x, t);
    ASSERT_EQ(z.size(), x.size());
    ASSERT_EQ(y.size(), x.size());
    EXPECT_EQ(z.head(n), x.segment(n, n));
    EXPECT_EQ(z(2 * n), 0.0);
    EXPECT_TRUE(y.head(n).isZero(0.0));
  }
}

TEST(Properties, ObjectiveBoundedBelowWithZeroGradientAtTarget) {
  vt::Gen g(13);
  for (int trial = 0; trial < kTrials; ++trial) {
    const Eigen::Index n = g.integer(1, 4);
    const Vector target = g.vector(n, -5, 5);
    const Objective j = g.integer(0, 1) ? quadratic_objective(target)
                                        : weighted_quadratic_objective(target, g.vector(n, 0.1, 3));
    ASSERT_TRUE(j.min_value);
    EXPECT_GE(j(g.vector(n, -10, 10)), *j.min_value);
    EXPECT_EQ(j(target), *j.min_value);
    EXPECT_LT(objective_gradient(j, target).norm(), 1e-9);
    const Vector q = g.vector(n, -10, 10);
    EXPECT_LT((objective_gradient(j, q) - fd_gradient(j, q)).norm(), 1e-6 * (1.0 + objective_gradient(j, q).norm()));
  }
}

TEST(Properties, AnalyticVelocityHessianMatchesDifferences) {
  vt::Gen g(14);
  for (int trial = 0; trial < kTrials; ++trial) {
    std::string name;
    MechanicalSystem sys = random_plant(g, name);
    const auto n = static_cast<Eigen::Index>(sys.dof);
    const Vector q = g.vector(n, -2, 2);
    Vector qd = g.vector(n, -2, 2);
    if (name == "flapping" && std::abs(qd(1)) < 0.5) qd(1) += qd(1) < 0 ? -0.5 : 0.5;
    const auto exact = sys.velocity_hessian(q, qd);
    const auto fd = fd_velocity_hessian(sys, q, qd);
    for (std::size_t i = 0; i < exact.size(); ++i) {
      EXPECT_LT((exact[i] - fd[i]).norm(), 1e-4 * (1.0 + exact[i].norm())) << name;
    }
  }
}

TEST(Properties, QuadraticDampingHasNoThirdVelocityDerivative) {
  vt::Gen g(15);
  MassSpringParams p;
  p.damping = Damping::cubic;
  const MechanicalSystem sys = make_mass_spring(p);
  for (int trial = 0; trial < kTrials; ++trial) {
    const Vector q = g.vector(1, -2, 2);
    const double v = g.uniform(-3, 3), dv = g.uniform(0.1, 1);
    auto h = [&](double w) { return sys.velocity_hessian(q, vt::vec({w}))[0](0, 0); };
    EXPECT_NEAR(h(v + dv) - 2 * h(v) + h(v - dv), 0.0, 1e-12);
  }
}

TEST(Properties, FlappingDriftParityInStrokeRate) {
  vt::Gen g(16);
  const FlappingParams p;
  for (int trial = 0; trial < kTrials; ++trial) {
    const double z = g.uniform(-2, 2), zd = g.uniform(-2, 2), phi = g.uniform(-2, 2), pd = g.uniform(-20, 20);
    const auto a = flapping_drift(p, z, zd, phi, pd), b = flapping_drift(p, z, zd, phi, -pd);
    EXPECT_DOUBLE_EQ(a(0), b(0));
    EXPECT_DOUBLE_EQ(a(1), -b(1));
  }
}

TEST(Properties, ClosenessIsSymmetric) {
  vt::Gen g(17);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory a, b;
    a.dof = b.dof = 1;
    const Vector x0 = g.vector(3, -1, 1);
    for (int i = 0; i < 20; ++i) {
      a.times.push_back(0.1 * i);
      b.times.push_back(0.1 * i);
      a.states.push_back(i ? g.vector(3, -1, 1) : x0);
      b.states.push_back(i ? g.vector(3, -1, 1) : x0);
    }
    EXPECT_EQ(closeness(a, b), closeness(b, a));
    EXPECT_GE(closeness(a, b), 0.0);
    EXPECT_EQ(closeness(a, a), 0.0);
  }
}

TEST(Properties, DitherHasZeroPeriodMean) {
  vt::Gen g(18);
  for (const auto& name : scenario_names()) {
    const Scenario s = scenario_defaults(name);
    const auto n = static_cast<Eigen::Index>(s.dof());
    for (int trial = 0; trial < 20; ++trial) {
      Vector x = g.vector(2 * n + 1, -1, 1);
      const Vector mean = scenario_dither_mean(s, x);
      const Vector peak = scenario_dither(s, x, 0.0);
      EXPECT_LT(mean.norm(), 1e-9 * (1.0 + peak.norm())) << name;
    }
  }
}

TEST(Properties, BaselineInputsArePeriodic) {
  vt::Gen g(19);
  const TwoDitherBaselineParams p;
  const double T = 2.0 * std::numbers::pi / p.omega;
  for (int trial = 0; trial < kTrials; ++trial) {
    const double J = g.uniform(0, 5), t = g.uniform(0, 10);
    const double a = two_dither_control(p, J, t), b = two_dither_control(p, J, t + T);
    EXPECT_NEAR(a, b, 1e-9 * (1.0 + std::abs(a)));
  }
}

TEST(Properties, AlphaIsIncreasingAndPositive) {
  vt::Gen g(20);
  for (int trial = 0; trial < kTrials; ++trial) {
    const double a = g.uniform(-50, 50), b = a + g.uniform(1e-3, 10);
    EXPECT_GT(two_dither_alpha(a), 0.0);
    EXPECT_LT(two_dither_alpha(a), two_dither_alpha(b));
    EXPECT_TRUE(std::isfinite(two_dither_alpha(1e6)));
  }
}

TEST(Properties, EmitParseRoundTripWithRandomGains) {
  vt::Gen g(21);
  for (int trial = 0; trial < 100; ++trial) {
    Scenario s = scenario_defaults(g.integer(0, 1) ? "mass_spring" : "flapping");
    const auto n = static_cast<Eigen::Index>(s.dof());
    s.gains = EscGains(g.vector(n, 1e-3, 1e3), g.vector(n, 1e-3, 10), g.uniform(1e-3, 100), g.uniform(1, 1e3));
    s.integration.tf = g.uniform(1, 100);
    s.initial_state = pack(g.vector(n, -5, 5), g.vector(n, -5, 5), g.uniform(-5, 5));
    s.objective.target = g.vector(n, -5, 5);
    EXPECT_EQ(parse_scenario(emit_scenario(s)), s);
  }
}

TEST(Properties, CsvIsDeterministic) {
  vt::Gen g(22);
  for (int trial = 0; trial < 5; ++trial) {
    Scenario s = scenario_defaults("mass_spring");
    s.integration.tf = g.uniform(0.5, 1.5);
    s.initial_state = pack(g.vector(1, -1, 1), g.vector(1, -1, 1), g.uniform(-1, 1));
    std::ostringstream a, b;
    const Trajectory ta = simulate_scenario(s), tb = simulate_scenario(s);
    write_csv(a, ta, derive_signals(s, ta));
    write_csv(b, tb, derive_signals(s, tb));
    EXPECT_EQ(a.str(), b.str());
  }
}
