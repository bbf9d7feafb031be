#include <gtest/gtest.h>

#include <cmath>

#include "bound_rollout.hpp"
#include "jetfault/flight_controller.hpp"
#include "test_support.hpp"

namespace jetfault {
namespace {

FaultStatus nominalStatus(int np) { return FaultStatus(np); }

FaultStatus faultAt(int np, int turbine, double t) {
  FaultStatus s(np);
  s[turbine].state = TurbineState::Fault;
  s[turbine].faultTime = t;
  return s;
}

TEST(LinearMomentumLaw, ZeroErrorPassesReferenceThrough) {
  const Vector3d ref(1.0, -2.0, 0.5);
  EXPECT_EQ(desiredLinearMomentumAcceleration(Vector3d::Zero(), Vector3d::Zero(), Vector3d::Zero(), ref,
                                              ControllerGains{}),
            ref);
}

TEST(LinearMomentumLaw, ProportionalTermOnly) {
  ControllerGains g;
  g.kp = Matrix3d::Identity() * 3.5;
  g.kd.setZero();
  g.ki.setZero();
  const Vector3d e(0.2, -1.0, 4.0);
  EXPECT_LT((desiredLinearMomentumAcceleration(e, Vector3d::Zero(), Vector3d::Zero(), Vector3d::Zero(), g) + 3.5 * e)
                .norm(),
            1e-15);
}

TEST(LinearMomentumLaw, FullPidMatchesHandExpansion) {
  ControllerGains g;
  const Vector3d e(1, 2, 3), ed(-1, 0.5, 0), ei(0.1, 0.1, -0.2), ref(0, 0, 9);
  const Vector3d expected(ref.x() - 6 * ed.x() - 12 * e.x() - 8 * ei.x(), ref.y() - 6 * ed.y() - 12 * e.y() - 8 * ei.y(),
                          ref.z() - 6 * ed.z() - 12 * e.z() - 8 * ei.z());
  EXPECT_LT((desiredLinearMomentumAcceleration(e, ed, ei, ref, g) - expected).norm(), 1e-12);
}

TEST(AngularMomentumLaw, EquilibriumIsZero) {
  const Matrix3d r = rpyToRotation(Vector3d(0.1, -0.3, 1.2));
  const Matrix3d inertia = Vector3d(2.0, 2.5, 0.7).asDiagonal();
  EXPECT_EQ(desiredAngularMomentumAcceleration(r, r, Vector3d::Zero(), Vector3d::Zero(), inertia, Vector3d::Zero(),
                                               ControllerGains{})
                .norm(),
            0.0);
}

TEST(AngularMomentumLaw, SmallAngleErrorIsOpposed) {
  const Matrix3d inertia = Vector3d(2.0, 2.5, 0.7).asDiagonal();
  for (int axis = 0; axis < 3; ++axis) {
    const Vector3d a = Vector3d::Unit(axis);
    const Matrix3d r = axisAngle(a, 0.05);
    const Vector3d out = desiredAngularMomentumAcceleration(r, Matrix3d::Identity(), Vector3d::Zero(),
                                                            Vector3d::Zero(), inertia, Vector3d::Zero(),
                                                            ControllerGains{});
    // Antiparallel to the error axis, scaled by K_R I_aa sin(angle).
    EXPECT_LT((out + 27.0 * inertia(axis, axis) * std::sin(0.05) * a).norm(), 1e-12);
  }
}

TEST(AngularMomentumLaw, CharacteristicPolynomialIsHurwitz) {
  // Linearized single-axis loop: s^3 + K_wdot s^2 + K_w s + K_R (Routh-Hurwitz).
  const ControllerGains g;
  EXPECT_GT(g.kAngularMomentumRate * g.kAngularMomentum, g.kAttitude);
}

TEST(ParametrizedBounds, MatchesTanhClosedForm) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const IntegralBoundSet b = testing::randomIntegralBoundSet(rng, 5);
    VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = b.lowerIntegral[i] + (1.4 * unit(rng) - 0.2) * b.nominalRange[i];
    const RateBounds r = parametrizedBounds(x, b);
    for (int i = 0; i < 5; ++i) {
      const double lo = std::tanh(b.sharpnessLower / b.nominalRange[i] * (x[i] - b.lowerIntegral[i])) * b.lowerRate[i];
      const double hi = std::tanh(b.sharpnessUpper / b.nominalRange[i] * (b.upperIntegral[i] - x[i])) * b.upperRate[i];
      if (lo <= hi) {
        EXPECT_DOUBLE_EQ(r.lower[i], lo);
        EXPECT_DOUBLE_EQ(r.upper[i], hi);
      } else {
        EXPECT_DOUBLE_EQ(r.lower[i], 0.5 * (lo + hi));
        EXPECT_EQ(r.lower[i], r.upper[i]);
      }
    }
  }
}

TEST(ParametrizedBounds, InteriorRecoversRateBox) {
  IntegralBoundSet b{Eigen::Vector2d(0, -1), Eigen::Vector2d(10, 1), Eigen::Vector2d(-3, -2), Eigen::Vector2d(4, 2)};
  b.sharpnessLower = b.sharpnessUpper = 500.0;
  const RateBounds r = parametrizedBounds(Eigen::Vector2d(5.0, 0.0), b);
  EXPECT_NEAR(r.lower[0], -3.0, 1e-12);
  EXPECT_NEAR(r.upper[0], 4.0, 1e-12);
  EXPECT_NEAR(r.lower[1], -2.0, 1e-12);
  EXPECT_NEAR(r.upper[1], 2.0, 1e-12);
}

TEST(ParametrizedBounds, AtLowerBoundOnlyNonNegativeRates) {
  IntegralBoundSet b{Eigen::Vector2d(0, -1), Eigen::Vector2d(10, 1), Eigen::Vector2d(-3, -2), Eigen::Vector2d(4, 2)};
  const RateBounds r = parametrizedBounds(Eigen::Vector2d(0.0, -1.0), b);
  EXPECT_EQ(r.lower[0], 0.0);
  EXPECT_EQ(r.lower[1], 0.0);
  EXPECT_GT(r.upper[0], 0.0);
}

TEST(ParametrizedBounds, OutsideForcesReturn) {
  IntegralBoundSet b{Eigen::Vector2d(0, -1), Eigen::Vector2d(10, 1), Eigen::Vector2d(-3, -2), Eigen::Vector2d(4, 2)};
  const RateBounds above = parametrizedBounds(Eigen::Vector2d(10.5, 1.2), b);
  EXPECT_LT(above.upper[0], 0.0);
  EXPECT_LT(above.upper[1], 0.0);
  const RateBounds below = parametrizedBounds(Eigen::Vector2d(-0.5, -1.2), b);
  EXPECT_GT(below.lower[0], 0.0);
  EXPECT_GT(below.lower[1], 0.0);
}

TEST(ParametrizedBounds, ForcingKeepsIntegralInsideAndReenters) {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const IntegralBoundSet b = testing::randomIntegralBoundSet(rng, 6);
    const testing::BoundForcingResult inside = testing::checkBoundForcing(rng, b, false);
    EXPECT_LE(inside.worstExcess, 1e-12);
    const testing::BoundForcingResult outside = testing::checkBoundForcing(rng, b, true);
    EXPECT_TRUE(outside.monotoneReentry);
    EXPECT_TRUE(outside.reentered);
  }
}

TEST(FaultSaturation, NoFaultLeavesBoundsUnchanged) {
  const IntegralBoundSet b = IntegralBoundSet::fromModel(testing::jetbot());
  const IntegralBoundSet out = applyFaultSaturation(b, nominalStatus(4), 20.0);
  EXPECT_EQ(out.upperIntegral, b.upperIntegral);
  EXPECT_EQ(out.lowerIntegral, b.lowerIntegral);
}

TEST(FaultSaturation, RampProfile) {
  const IntegralBoundSet b = IntegralBoundSet::fromModel(testing::jetbot(), 5.0);
  const FaultStatus status = faultAt(4, 1, 15.31);
  const double ramp = 0.2;
  const double top = b.upperIntegral[1];
  EXPECT_EQ(applyFaultSaturation(b, status, 15.31, ramp).upperIntegral, b.upperIntegral);
  EXPECT_NEAR(applyFaultSaturation(b, status, 15.31 + ramp / 2, ramp).upperIntegral[1], 0.5 * top, 1e-9);
  // smoothstep(1/4) = 5/32.
  EXPECT_NEAR(applyFaultSaturation(b, status, 15.31 + ramp / 4, ramp).upperIntegral[1], (1.0 - 5.0 / 32.0) * top,
              1e-9);
  const IntegralBoundSet end = applyFaultSaturation(b, status, 15.31 + ramp, ramp);
  EXPECT_EQ(end.upperIntegral[1], 0.0);
  EXPECT_EQ(end.lowerIntegral[1], 0.0);
  for (int k : {0, 2, 3, 4, 5, 6, 7}) EXPECT_EQ(end.upperIntegral[k], b.upperIntegral[k]);
  // Continuity: small time steps give small bound changes.
  double previous = b.upperIntegral[1];
  for (int i = 0; i <= 400; ++i) {
    const double v = applyFaultSaturation(b, status, 15.3 + i * 1e-3, ramp).upperIntegral[1];
    EXPECT_LE(std::abs(v - previous), top * 1.5 / ramp * 1e-3 + 1e-12);
    previous = v;
  }
}

TEST(WeightSchedule, NominalBeforeFault) {
  const ControllerGains g;
  const TaskWeights w = scheduleWeights(g, nominalStatus(4), 30.0);
  EXPECT_EQ(w.linear, g.weightLinear);
  EXPECT_EQ(w.angular, g.weightAngular);
  const TaskWeights before = scheduleWeights(g, faultAt(4, 0, 15.31), 15.0);
  EXPECT_EQ(before.linear, g.weightLinear);
}

TEST(WeightSchedule, MidpointIsArithmeticMean) {
  ControllerGains g;
  g.weightLinear = 3.0;
  g.weightAngular = 0.5;
  const TaskWeights w = scheduleWeights(g, faultAt(4, 2, 15.31), 15.31 + 0.5 * g.scheduleRamp);
  EXPECT_NEAR(w.linear, 0.5 * (3.0 + 3.0 / g.alpha), 1e-12);
  EXPECT_NEAR(w.angular, 0.5 * (0.5 + 0.5 / g.alpha), 1e-12);
  const TaskWeights bottom = scheduleWeights(g, faultAt(4, 2, 15.31), 15.31 + g.scheduleRamp);
  EXPECT_NEAR(bottom.linear, 3.0 / g.alpha, 1e-12);
}

TEST(WeightSchedule, TraceIsContinuousAndReturnsToNominal) {
  const ControllerGains g;
  const FaultStatus status = faultAt(4, 3, 15.31);
  double previous = scheduleWeights(g, status, 0.0).linear;
  const double maxSlope = (g.weightLinear - g.weightLinear / g.alpha) / g.scheduleRamp;
  for (int i = 1; i <= 4000; ++i) {
    const double w = scheduleWeights(g, status, i * 0.01).linear;
    EXPECT_LE(std::abs(w - previous), maxSlope * 0.01 + 1e-12);
    EXPECT_GE(w, g.weightLinear / g.alpha - 1e-12);
    EXPECT_LE(w, g.weightLinear + 1e-12);
    previous = w;
  }
  EXPECT_EQ(scheduleWeights(g, status, 40.0).linear, g.weightLinear);
}

TEST(WeightSchedule, UnitAlphaNeverChangesWeights) {
  ControllerGains g;
  g.alpha = 1.0;
  for (int i = 0; i <= 4000; ++i) {
    const TaskWeights w = scheduleWeights(g, faultAt(4, 0, 15.31), i * 0.01);
    EXPECT_EQ(w.linear, g.weightLinear);
    EXPECT_EQ(w.angular, g.weightAngular);
  }
}

TEST(ControllerGains, RejectsInvalid) {
  ControllerGains g;
  EXPECT_NO_THROW(g.validate(4));
  g.kp(0, 1) = 1.0;
  EXPECT_THROW(g.validate(4), std::invalid_argument);
  g = ControllerGains{};
  g.alpha = 0.0;
  EXPECT_THROW(g.validate(4), std::invalid_argument);
  g = ControllerGains{};
  g.kPosture = VectorXd::Ones(3);
  EXPECT_THROW(g.validate(4), std::invalid_argument);
}

struct HoverFixture {
  RobotModel model = testing::symmetricFlyer();
  double hoverThrust = model.totalMass() * model.gravity() / 4.0;

  ControllerInput hoverInput() const {
    return {Configuration::zero(model), SystemVelocity::zero(model), VectorXd::Constant(4, hoverThrust)};
  }
  ReferenceSample hoverReference() const {
    ReferenceSample r;
    r.posture = VectorXd::Zero(2);
    return r;
  }
  FlightController controller(ControllerGains g = {}) const {
    return FlightController(model, g, IntegralBoundSet::fromModel(model, 5.0), VectorXd::Constant(4, hoverThrust));
  }
};

TEST(ControlStep, HoverEquilibriumIsFixedPoint) {
  const HoverFixture f;
  FlightController c = f.controller();
  const ControlOutput out = c.step(0.0, f.hoverInput(), f.hoverReference(), nominalStatus(4));
  ASSERT_EQ(out.qpStatus, QpStatus::Solved);
  EXPECT_LE(out.u.norm(), 1e-6);
  EXPECT_LE(out.momentumError.norm(), 1e-12);
}

// Jetbot near hover (its thrust map has full rank, unlike the symmetric flyer
// whose vertical jets leave a null space held only by the regularization).
TEST(ControlStep, SmallPerturbationMatchesNormalEquations) {
  const RobotModel& model = testing::jetbot();
  testing::StateSampler sampler(23);
  const VectorXd posture = Eigen::Vector4d(0.0, 0.3, 0.0, -0.3);
  for (int trial = 0; trial < 20; ++trial) {
    // The state is not balanced; the reference absorbs the linear rate error
    // and a small rate gain keeps the angular demand away from the rate box.
    ControllerGains gains;
    gains.kAngularMomentumRate = 0.01;
    FlightController c(model, gains, IntegralBoundSet::fromModel(model, 5.0), VectorXd::Constant(4, 108.0));
    ControllerInput in{Configuration::zero(model), sampler.velocity(model, 1e-3), VectorXd::Constant(4, 108.0)};
    in.q.jointPositions = posture + 2e-3 * Eigen::Vector4d(sampler.normal(), sampler.normal(), sampler.normal(),
                                                           sampler.normal());
    in.q.baseRotation = expSO3(sampler.vector(1e-3));
    for (int k = 0; k < 4; ++k) in.thrusts[k] += sampler.normal(0.05);
    ReferenceSample ref;
    ref.posture = posture;
    ref.linearMomentumRate = momentumRate(model, in.q, in.thrusts).linear;
    const ControlOutput out = c.step(0.0, in, ref, nominalStatus(4));
    ASSERT_EQ(out.qpStatus, QpStatus::Solved);
    ASSERT_TRUE(((out.u - out.bounds.lower).array() > 1e-9).all() && ((out.bounds.upper - out.u).array() > 1e-9).all())
        << out.u.transpose();

    // Independent assembly: weighted normal equations of the three tasks.
    const auto lambda = momentumAccelerationMap(model, in.q, in.nu, in.thrusts);
    MatrixXd a = MatrixXd::Zero(10, 8);
    VectorXd b(10), w(10);
    a.topRows<6>() = lambda.map;
    a.bottomRightCorner<4, 4>().setIdentity();
    b.head<3>() = out.desiredLinear - lambda.drift.head<3>();
    b.segment<3>(3) = out.desiredAngular - lambda.drift.tail<3>();
    b.tail<4>() = -2.0 * (in.q.jointPositions - posture);
    w << 1, 1, 1, 1, 1, 1, 10, 10, 10, 10;
    const MatrixXd normal = a.transpose() * w.asDiagonal() * a + kTaskRegularization * MatrixXd::Identity(8, 8);
    const VectorXd expected = normal.ldlt().solve(a.transpose() * w.asDiagonal() * b);
    EXPECT_LT((out.u - expected).norm(), 1e-8 * (1.0 + expected.norm()));
  }
}

TEST(ControlStep, PinnedFaultyTurbineRateIsExactlyZero) {
  const HoverFixture f;
  // Commanded thrust of turbine 2 already at zero, ramp finished.
  VectorXd start = VectorXd::Constant(4, f.hoverThrust);
  start[2] = 0.0;
  FlightController c(f.model, ControllerGains{}, IntegralBoundSet::fromModel(f.model, 5.0), start);
  ControllerInput in = f.hoverInput();
  in.thrusts[2] = 0.0;
  FaultStatus status = faultAt(4, 2, 1.0);
  status[2].state = TurbineState::Off;
  const ControlOutput out = c.step(2.0, in, f.hoverReference(), status);
  EXPECT_EQ(out.bounds.lower[2], 0.0);
  EXPECT_EQ(out.bounds.upper[2], 0.0);
  EXPECT_EQ(out.u[2], 0.0);
}

TEST(ControlStep, CommandRespectsBounds) {
  const HoverFixture f;
  testing::StateSampler sampler(24);
  FlightController c = f.controller();
  for (int i = 0; i < 50; ++i) {
    ControllerInput in = f.hoverInput();
    in.nu = sampler.velocity(f.model, 0.5);
    in.q.baseRotation = expSO3(sampler.vector(0.3));
    const ControlOutput out = c.step(i * 0.01, in, f.hoverReference(), nominalStatus(4));
    EXPECT_TRUE(((out.u - out.bounds.lower).array() >= -1e-12).all());
    EXPECT_TRUE(((out.bounds.upper - out.u).array() >= -1e-12).all());
  }
}

// With alpha = 1 the schedule is the identity, so controllers differing only
// in the schedule duration produce bitwise-identical commands across a fault.
TEST(ControlStep, UnitAlphaEqualsUnscheduled) {
  const HoverFixture f;
  ControllerGains g1;
  g1.alpha = 1.0;
  ControllerGains g2 = g1;
  g2.scheduleRamp = 0.3;
  FlightController a = f.controller(g1);
  FlightController b = f.controller(g2);
  testing::StateSampler sampler(25);
  for (int i = 0; i < 100; ++i) {
    ControllerInput in = f.hoverInput();
    in.nu = sampler.velocity(f.model, 0.1);
    const double t = 15.0 + i * 0.01;
    const FaultStatus status = t >= 15.31 ? faultAt(4, 1, 15.31) : nominalStatus(4);
    EXPECT_EQ(a.step(t, in, f.hoverReference(), status).u, b.step(t, in, f.hoverReference(), status).u);
  }
}

TEST(ControlStep, ThrustCommandIntegratesRates) {
  const HoverFixture f;
  FlightController c = f.controller();
  ControllerInput in = f.hoverInput();
  ReferenceSample ref = f.hoverReference();
  ref.linearMomentumAcceleration = Vector3d(0.0, 0.0, 50.0);  // ask for more lift
  VectorXd expected = VectorXd::Constant(4, f.hoverThrust);
  VectorXd previous;
  for (int i = 0; i < 5; ++i) {
    const VectorXd u = c.step(i * 0.01, in, ref, nominalStatus(4)).u.head<4>();
    expected += 0.01 * 0.5 * ((i == 0 ? u : previous) + u);
    previous = u;
  }
  EXPECT_LT((c.thrustCommand() - expected).norm(), 1e-12);
  EXPECT_GT(c.thrustCommand().sum(), 4.0 * f.hoverThrust);
}

}  // namespace
}  // namespace jetfault
