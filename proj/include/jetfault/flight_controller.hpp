#pragma once

#include <optional>

#include "jetfault/fault_detection.hpp"
#include "jetfault/momentum.hpp"
#include "jetfault/qp.hpp"

namespace jetfault {

struct ControllerGains {
  // Linear momentum PID. With l = m v_com these act on CoM velocity,
  // acceleration and position error respectively.
  Matrix3d kp = Matrix3d::Identity() * 12.0;
  Matrix3d kd = Matrix3d::Identity() * 6.0;
  Matrix3d ki = Matrix3d::Identity() * 8.0;
  // Attitude law on body-coordinate angular momentum.
  double kAttitude = 27.0;
  double kAngularMomentum = 27.0;
  double kAngularMomentumRate = 9.0;
  VectorXd kPosture;  // diagonal of K_P^s; empty means 2.0 for every joint
  double weightLinear = 1.0;
  double weightAngular = 1.0;
  double weightPosture = 10.0;
  double alpha = 10.0;
  double scheduleRamp = 1.0;     // W -> W/alpha, then back, each over this many seconds
  double faultBoundRamp = 0.2;   // faulty thrust upper bound ramp to zero
  double integralLimit = 20.0;   // anti-windup box on the integral of the linear momentum error

  void validate(int numJoints) const;  // throws std::invalid_argument
  double posturalGain(int joint) const { return kPosture.size() ? kPosture[joint] : 2.0; }
};

/// Box on I_u = (T, s) and on its derivative u = (Tdot, sdot).
struct IntegralBoundSet {
  VectorXd lowerIntegral;
  VectorXd upperIntegral;
  VectorXd lowerRate;
  VectorXd upperRate;
  double sharpnessLower = 50.0;  // per unit of the nominal integral range
  double sharpnessUpper = 50.0;
  // Range used to normalize the sharpness; filled from the nominal box when empty.
  VectorXd nominalRange;

  void validate() const;
  VectorXd range() const { return nominalRange.size() ? nominalRange : VectorXd(upperIntegral - lowerIntegral); }

  /// Thrust in [minThrust, maxThrust], joint limits, thrust-rate and joint
  /// velocity limits from the model.
  static IntegralBoundSet fromModel(const RobotModel& model, double minThrust = 0.0);
};

struct RateBounds {
  VectorXd lower;
  VectorXd upper;
};

/// tanh(eps_l (I_u - lb)) lb_u <= u <= tanh(eps_u (ub - I_u)) ub_u, elementwise.
RateBounds parametrizedBounds(const VectorXd& integral, const IntegralBoundSet& bounds);

/// Drives the thrust upper integral bound of every turbine past Nominal to
/// zero with a smoothstep ramp starting at its detection time.
IntegralBoundSet applyFaultSaturation(const IntegralBoundSet& bounds, const FaultStatus& status, double time,
                                      double ramp = 0.2);

struct TaskWeights {
  double linear = 1.0;
  double angular = 1.0;
};

/// Earliest detection time over all turbines, if any.
std::optional<double> detectionTime(const FaultStatus& status);

/// Piecewise-linear W -> W/alpha over [t_d, t_d + ramp], back to W over
/// [t_d + ramp, t_d + 2 ramp].
TaskWeights scheduleWeights(const ControllerGains& gains, const FaultStatus& status, double time);

/// One sample of the time-varying reference.
struct ReferenceSample {
  Vector3d linearMomentum = Vector3d::Zero();
  Vector3d linearMomentumRate = Vector3d::Zero();
  Vector3d linearMomentumAcceleration = Vector3d::Zero();
  Matrix3d attitude = Matrix3d::Identity();
  Vector3d angularVelocity = Vector3d::Zero();  // inertial axes
  VectorXd posture;
};

/// Static hover references: attitude, posture and thrusts.
struct ReferenceSet {
  Matrix3d attitude = Matrix3d::Identity();
  VectorXd posture;
  VectorXd thrusts;
};

Vector3d desiredLinearMomentumAcceleration(const Vector3d& error, const Vector3d& errorRate,
                                           const Vector3d& errorIntegral, const Vector3d& referenceAcceleration,
                                           const ControllerGains& gains);

/// All quantities in body coordinates except the rotations.
Vector3d desiredAngularMomentumAcceleration(const Matrix3d& rotation, const Matrix3d& desiredRotation,
                                            const Vector3d& angularMomentum, const Vector3d& angularMomentumRate,
                                            const Matrix3d& lockedInertia, const Vector3d& angularVelocityReference,
                                            const ControllerGains& gains);

struct ControlOutput {
  VectorXd u;  // (Tdot, sdot)
  RateBounds bounds;
  TaskWeights weights;
  QpStatus qpStatus = QpStatus::Solved;
  double kktResidual = 0.0;
  int qpIterations = 0;
  Vector6d momentumError = Vector6d::Zero();  // (l - l_d, w - I omega_ref), body angular part
  double jointError = 0.0;
  Vector3d desiredLinear = Vector3d::Zero();
  Vector3d desiredAngular = Vector3d::Zero();
};

/// Measured quantities handed to the controller each tick.
struct ControllerInput {
  Configuration q;
  SystemVelocity nu;
  VectorXd thrusts;
};

class FlightController {
 public:
  FlightController(const RobotModel& model, ControllerGains gains, IntegralBoundSet bounds,
                   const VectorXd& initialThrustCommand);

  ControlOutput step(double time, const ControllerInput& input, const ReferenceSample& ref, const FaultStatus& status,
                     double dt = 0.01);

  /// Commanded thrust integral T* (part of I_u).
  VectorXd thrustCommand() const;
  const Vector3d& integralError() const { return integral_; }
  const ControllerGains& gains() const { return gains_; }

 private:
  const RobotModel* model_;
  ControllerGains gains_;
  IntegralBoundSet bounds_;
  std::vector<TrapezoidIntegrator> thrustCommand_;
  VectorXd lastCommand_;
  Vector3d integral_ = Vector3d::Zero();
};

}  // namespace jetfault
