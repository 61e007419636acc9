#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vibresc/benchmarks.hpp"
#include "vibresc/scenario.hpp"
#include "vibresc/voc_averaging.hpp"

using namespace vibresc;
using vt::vec;

namespace {

EscClosedLoop mass_spring_loop() { return make_loop(scenario_defaults("mass_spring")); }

}  // namespace

TEST(LieBracket, LinearFieldsGiveMatrixCommutator) {
  Matrix P(2, 2), Q(2, 2);
  P << 1, 2, 0, -1;
  Q << 0, 1, 3, 0;
  const Field F = [P](const Vector& x) -> Vector { return P * x; };
  const Field G = [Q](const Vector& x) -> Vector { return Q * x; };
  const Vector x = vec({0.7, -1.2});
  // [F, G] = (QP − PQ)x under (∂G/∂x)F − (∂F/∂x)G
  EXPECT_TRUE(lie_bracket(F, G, x).isApprox((Q * P - P * Q) * x, 1e-9));
}

TEST(Brackets, ClosedFormsAtInitialMassSpringState) {
  const auto loop = mass_spring_loop();
  const Vector x = vec({3.0, 0.0, 0.0});
  EXPECT_TRUE(bracket_yz_closed_form(loop, x, 0.0).isApprox(vec({15.0, 2970.0, 0.0}), 1e-14));
  EXPECT_TRUE(bracket_yyz_closed_form(loop, x, 0.0).isApprox(vec({0.0, 0.0, -30000.0}), 1e-14));
}

TEST(Brackets, FiniteDifferencesAgreeAtInitialState) {
  const auto loop = mass_spring_loop();
  const Vector x = vec({3.0, 0.0, 0.0});
  EXPECT_LT((fd_bracket_yz(loop, x, 0.0) - vec({15.0, 2970.0, 0.0})).norm(), 1e-7);
  EXPECT_LT((fd_bracket_yyz(loop, x, 0.0) - vec({0.0, 0.0, -30000.0})).norm(), 1e-4);
}

TEST(Brackets, FlappingClosedFormMatchesFiniteDifferences) {
  const auto loop = make_loop(scenario_defaults("flapping"));
  const Vector x = vec({0.4, 0.1, -0.5, 80.0, 2.0});
  const double t = 0.0013;
  const Vector a = bracket_yyz_closed_form(loop, x, t), b = fd_bracket_yyz(loop, x, t);
  EXPECT_LT((a - b).norm() / (a.norm() + std::pow(loop.gains().omega(), 2)), 1e-6);
}

TEST(M22, FlappingEntryFromDragCoupling) {
  const auto s = scenario_defaults("flapping");
  const auto& p = std::get<FlappingParams>(s.plant);
  const Matrix M = m22(make_flapping(p), vec({0.0, 0.0}), vec({0.0, 10.0}), s.gains->A());
  // d²f₁/(dż dφ̇)·a₂ = −k_d1·sign(φ̇)·a₂
  const double a2 = 2.575e-5 / p.I_F;
  EXPECT_NEAR(M(0, 0), -p.k_d1 * a2, 1e-12);
  EXPECT_NEAR(M(0, 0), -6.911586046, 1e-8);
}

TEST(M22, AnalyticAndFiniteDifferenceHessiansAgree) {
  const auto s = scenario_defaults("flapping");
  const auto sys = make_system(s.plant);
  const Vector q = vec({0.2, 0.1}), qd = vec({-0.4, -35.0});
  const Matrix a = m22(sys, q, qd, s.gains->A(), HessianSource::analytic);
  const Matrix f = m22(sys, q, qd, s.gains->A(), HessianSource::finite_difference);
  EXPECT_LT((a - f).norm(), 1e-5 * (1.0 + a.norm()));
}

TEST(M22, NonsmoothPointIsReported) {
  const auto s = scenario_defaults("flapping");
  try {
    m22(make_system(s.plant), vec({0.0, 0.0}), vec({1.0, 0.0}), s.gains->A(), HessianSource::finite_difference);
    FAIL();
  } catch (const NonsmoothPointError& e) {
    EXPECT_EQ(e.velocity_index(), 1u);
  }
  const auto loop = make_loop(s);
  EXPECT_THROW(fd_bracket_yyz(loop, vec({0.0, 0.0, 0.0, 0.0, 0.0}), 0.0), NonsmoothPointError);
}

TEST(AveragedRhs, MassSpringAtInitialState) {
  const AveragedLoop avg(mass_spring_loop());
  // correction ¼·[0; 0; −2·5·4·0.3]
  EXPECT_TRUE(averaged_rhs(avg, vec({3.0, 0.0, 0.0})).isApprox(vec({0.0, -60.0, -3.0}), 1e-14));
  AveragedLoop fd(mass_spring_loop(), HessianSource::finite_difference);
  EXPECT_LT((averaged_rhs(fd, vec({3.0, 1.0, 0.5})) - averaged_rhs(avg, vec({3.0, 1.0, 0.5}))).norm(), 1e-6);
}

TEST(AveragedRhs, EqualsDriftAtTheOptimumWithLinearDamping) {
  const AveragedLoop avg(mass_spring_loop());
  const Vector x = vec({1.0, 0.3, 2.0});
  EXPECT_TRUE(averaged_rhs(avg, x).isApprox(drift_field(avg.loop, x), 1e-14));
}

TEST(IteratedDitherFactor, IsOneQuarterForAnyFrequency) {
  for (double w : {1.0, 25.0, 50.0, 165.25}) EXPECT_NEAR(iterated_dither_factor(w), 0.25, 1e-5) << w;
}

TEST(FirstOrderTerm, VanishesOnAverage) {
  const auto loop = mass_spring_loop();
  const Vector term = first_order_term(loop, vec({2.0, 0.5, 1.0}));
  EXPECT_LT(term.norm(), 1e-6 * fd_bracket_yz(loop, vec({2.0, 0.5, 1.0}), 0.0).norm());
}

TEST(Order3Residual, SmallForQuadraticDriftLargeForCubic) {
  const Vector x = vec({2.0, 1.5, 0.5});
  const auto smooth = bracket_order3_residual(mass_spring_loop(), x, 0.0);
  ASSERT_TRUE(smooth.residual);
  EXPECT_LT(*smooth.residual, 1e-6);
  const auto cubic = bracket_order3_residual(make_loop(scenario_defaults("mass_spring_cubic")), x, 0.0);
  ASSERT_TRUE(cubic.residual);
  EXPECT_GT(*cubic.residual, 1e-2);
}

TEST(Order3Residual, SkipsNonsmoothStates) {
  const auto res = bracket_order3_residual(make_loop(scenario_defaults("flapping")), Vector::Zero(5), 0.0);
  EXPECT_FALSE(res.residual);
  EXPECT_NE(res.skip_reason.find("qdot[1]"), std::string::npos);
}

TEST(LiftThroughDither, IdentityAtPeriodBoundaries) {
  const auto loop = mass_spring_loop();
  const Vector x = vec({3.0, -1.0, 2.0});
  EXPECT_EQ(lift_through_dither(loop, x, 0.0), x);
  const Vector quarter = lift_through_dither(loop, x, loop.gains().period() / 4);
  EXPECT_NEAR(quarter(1), -1.0 + 0.3, 1e-12);
  EXPECT_NEAR(quarter(2), 2.0 + 5.0 * 4.0, 1e-12);
  EXPECT_EQ(quarter(0), 3.0);
}
