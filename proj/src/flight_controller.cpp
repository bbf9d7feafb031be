#include "jetfault/flight_controller.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace jetfault {

namespace {

bool positiveDefinite(const Matrix3d& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  return Eigen::SelfAdjointEigenSolver<Matrix3d>(m).eigenvalues().minCoeff() > 0.0;
}

}  // namespace

void ControllerGains::validate(int numJoints) const {
  if (!positiveDefinite(kp) || !positiveDefinite(kd) || !positiveDefinite(ki))
    throw std::invalid_argument("controller gains: K_P, K_D, K_I must be symmetric positive definite");
  if (!(kAttitude > 0.0) || !(kAngularMomentum > 0.0) || !(kAngularMomentumRate > 0.0))
    throw std::invalid_argument("controller gains: attitude gains must be positive");
  if (kPosture.size() != 0 && (kPosture.size() != numJoints || (kPosture.array() <= 0.0).any()))
    throw std::invalid_argument("controller gains: postural gain must be positive with one entry per joint");
  if (!(weightLinear > 0.0) || !(weightAngular > 0.0) || !(weightPosture > 0.0))
    throw std::invalid_argument("controller gains: task weights must be positive");
  if (!(alpha > 0.0) || !(scheduleRamp > 0.0) || !(faultBoundRamp > 0.0) || !(integralLimit > 0.0))
    throw std::invalid_argument("controller gains: alpha, ramps and integral limit must be positive");
}

void IntegralBoundSet::validate() const {
  const auto d = lowerIntegral.size();
  if (upperIntegral.size() != d || lowerRate.size() != d || upperRate.size() != d ||
      (nominalRange.size() != 0 && nominalRange.size() != d))
    throw std::invalid_argument("integral bounds: dimension mismatch");
  if ((lowerIntegral.array() > upperIntegral.array()).any() || (lowerRate.array() > upperRate.array()).any())
    throw std::invalid_argument("integral bounds: lower > upper");
  if ((lowerRate.array() > 0.0).any() || (upperRate.array() < 0.0).any())
    throw std::invalid_argument("integral bounds: rate box must contain zero");
  if (!(sharpnessLower > 0.0) || !(sharpnessUpper > 0.0))
    throw std::invalid_argument("integral bounds: sharpness must be positive");
  if ((range().array() <= 0.0).any()) throw std::invalid_argument("integral bounds: empty nominal range");
}

IntegralBoundSet IntegralBoundSet::fromModel(const RobotModel& model, double minThrust) {
  const int np = model.numThrusters();
  const int n = model.numJoints();
  IntegralBoundSet b;
  b.lowerIntegral.resize(np + n);
  b.upperIntegral.resize(np + n);
  b.lowerRate.resize(np + n);
  b.upperRate.resize(np + n);
  for (int k = 0; k < np; ++k) {
    const Thruster& t = model.thrusters()[k];
    b.lowerIntegral[k] = minThrust;
    b.upperIntegral[k] = t.maxThrust;
    b.lowerRate[k] = -t.maxThrustRate;
    b.upperRate[k] = t.maxThrustRate;
  }
  for (int j = 0; j < n; ++j) {
    const Joint& jt = model.joints()[j];
    b.lowerIntegral[np + j] = jt.lowerLimit;
    b.upperIntegral[np + j] = jt.upperLimit;
    b.lowerRate[np + j] = -jt.velocityLimit;
    b.upperRate[np + j] = jt.velocityLimit;
  }
  b.nominalRange = b.upperIntegral - b.lowerIntegral;
  b.validate();
  return b;
}

RateBounds parametrizedBounds(const VectorXd& integral, const IntegralBoundSet& bounds) {
  if (integral.size() != bounds.lowerIntegral.size())
    throw std::invalid_argument("parametrizedBounds: dimension mismatch");
  const VectorXd range = bounds.range();
  RateBounds out{VectorXd(integral.size()), VectorXd(integral.size())};
  for (Eigen::Index i = 0; i < integral.size(); ++i) {
    const double el = bounds.sharpnessLower / range[i];
    const double eu = bounds.sharpnessUpper / range[i];
    double lo = std::tanh(el * (integral[i] - bounds.lowerIntegral[i])) * bounds.lowerRate[i];
    double hi = std::tanh(eu * (bounds.upperIntegral[i] - integral[i])) * bounds.upperRate[i];
    if (lo > hi) lo = hi = 0.5 * (lo + hi);
    out.lower[i] = lo;
    out.upper[i] = hi;
  }
  return out;
}

IntegralBoundSet applyFaultSaturation(const IntegralBoundSet& bounds, const FaultStatus& status, double time,
                                      double ramp) {
  IntegralBoundSet out = bounds;
  if (out.nominalRange.size() == 0) out.nominalRange = bounds.upperIntegral - bounds.lowerIntegral;
  for (std::size_t k = 0; k < status.size(); ++k) {
    if (status[k].state == TurbineState::Nominal) continue;
    const double scale = 1.0 - smoothstep((time - status[k].faultTime) / ramp);
    out.upperIntegral[k] = bounds.upperIntegral[k] * scale;
    out.lowerIntegral[k] = std::min(bounds.lowerIntegral[k], out.upperIntegral[k]);
  }
  return out;
}

std::optional<double> detectionTime(const FaultStatus& status) {
  std::optional<double> t;
  for (const TurbineStatus& s : status)
    if (s.state != TurbineState::Nominal && (!t || s.faultTime < *t)) t = s.faultTime;
  return t;
}

TaskWeights scheduleWeights(const ControllerGains& gains, const FaultStatus& status, double time) {
  TaskWeights w{gains.weightLinear, gains.weightAngular};
  const std::optional<double> td = detectionTime(status);
  if (!td) return w;
  const double elapsed = time - *td;
  double blend = 0.0;  // 0 nominal, 1 fully scaled
  if (elapsed <= 0.0)
    blend = 0.0;
  else if (elapsed < gains.scheduleRamp)
    blend = elapsed / gains.scheduleRamp;
  else if (elapsed < 2.0 * gains.scheduleRamp)
    blend = 2.0 - elapsed / gains.scheduleRamp;
  const double factor = 1.0 + blend * (1.0 / gains.alpha - 1.0);
  w.linear *= factor;
  w.angular *= factor;
  return w;
}

Vector3d desiredLinearMomentumAcceleration(const Vector3d& error, const Vector3d& errorRate,
                                           const Vector3d& errorIntegral, const Vector3d& referenceAcceleration,
                                           const ControllerGains& gains) {
  return referenceAcceleration - gains.kd * errorRate - gains.kp * error - gains.ki * errorIntegral;
}

Vector3d desiredAngularMomentumAcceleration(const Matrix3d& rotation, const Matrix3d& desiredRotation,
                                            const Vector3d& angularMomentum, const Vector3d& angularMomentumRate,
                                            const Matrix3d& lockedInertia, const Vector3d& angularVelocityReference,
                                            const ControllerGains& gains) {
  const Vector3d eR = attitudeError(rotation, desiredRotation);
  return -gains.kAngularMomentumRate * angularMomentumRate -
         gains.kAngularMomentum * (angularMomentum - lockedInertia * angularVelocityReference) -
         gains.kAttitude * lockedInertia * eR;
}

FlightController::FlightController(const RobotModel& model, ControllerGains gains, IntegralBoundSet bounds,
                                   const VectorXd& initialThrustCommand)
    : model_(&model), gains_(std::move(gains)), bounds_(std::move(bounds)) {
  gains_.validate(model.numJoints());
  if (bounds_.nominalRange.size() == 0) bounds_.nominalRange = bounds_.upperIntegral - bounds_.lowerIntegral;
  bounds_.validate();
  const int np = model.numThrusters();
  if (bounds_.lowerIntegral.size() != np + model.numJoints() || initialThrustCommand.size() != np)
    throw std::invalid_argument("flight controller: dimension mismatch");
  for (int k = 0; k < np; ++k)
    thrustCommand_.emplace_back(initialThrustCommand[k], 0.0, model.thrusters()[k].maxThrust);
  lastCommand_ = VectorXd::Zero(np + model.numJoints());
}

VectorXd FlightController::thrustCommand() const {
  VectorXd out(thrustCommand_.size());
  for (std::size_t k = 0; k < thrustCommand_.size(); ++k) out[k] = thrustCommand_[k].value();
  return out;
}

ControlOutput FlightController::step(double time, const ControllerInput& in, const ReferenceSample& ref,
                                     const FaultStatus& status, double dt) {
  const RobotModel& model = *model_;
  const int np = model.numThrusters();
  const int n = model.numJoints();
  if (in.thrusts.size() != np || in.q.jointPositions.size() != n || ref.posture.size() != n ||
      status.size() != static_cast<std::size_t>(np))
    throw std::invalid_argument("flight controller step: dimension mismatch");

  const Matrix3d& rb = in.q.baseRotation;
  const CentroidalMomentum cm = centroidalMomentum(model, in.q, in.nu);
  const Vector3d l = cm.momentum.head<3>();
  const Vector3d bodyW = rb.transpose() * cm.momentum.tail<3>();
  const Vector6d rate = mixedMomentumRate(model, in.q, in.thrusts);

  const Vector3d lError = l - ref.linearMomentum;
  const Vector3d lErrorRate = rate.head<3>() - ref.linearMomentumRate;
  integral_ = (integral_ + dt * lError).cwiseMax(-gains_.integralLimit).cwiseMin(gains_.integralLimit);

  ControlOutput out;
  out.desiredLinear = desiredLinearMomentumAcceleration(lError, lErrorRate, integral_,
                                                        ref.linearMomentumAcceleration, gains_);
  const Matrix3d inertia = lockedInertia(model, in.q.jointPositions);
  const Vector3d omegaRef = rb.transpose() * ref.angularVelocity;
  out.desiredAngular = desiredAngularMomentumAcceleration(rb, ref.attitude, bodyW, rate.tail<3>(), inertia,
                                                          omegaRef, gains_);
  out.momentumError << lError, bodyW - inertia * omegaRef;
  out.jointError = (in.q.jointPositions - ref.posture).norm();

  MomentumAccelerationMap lambda = momentumAccelerationMap(model, in.q, in.nu, in.thrusts);
  // A turbine flagged by the detector no longer responds to commands.
  for (int k = 0; k < np; ++k)
    if (status[k].state != TurbineState::Nominal) lambda.map.col(k).setZero();

  VectorXd postureRate(n);
  for (int j = 0; j < n; ++j)
    postureRate[j] = -gains_.posturalGain(j) * (in.q.jointPositions[j] - ref.posture[j]);
  MatrixXd selector = MatrixXd::Zero(n, np + n);
  selector.rightCols(n).setIdentity();

  out.weights = scheduleWeights(gains_, status, time);
  const std::array tasks{
      Task{lambda.map.topRows<3>(), out.desiredLinear - lambda.drift.head<3>(), out.weights.linear},
      Task{lambda.map.bottomRows<3>(), out.desiredAngular - lambda.drift.tail<3>(), out.weights.angular},
      Task{selector, postureRate, gains_.weightPosture}};
  BoxQP qp = stackTasks(tasks);

  VectorXd integralState(np + n);
  integralState << thrustCommand(), in.q.jointPositions;
  out.bounds = parametrizedBounds(integralState,
                                  applyFaultSaturation(bounds_, status, time, gains_.faultBoundRamp));
  qp.lower = out.bounds.lower;
  qp.upper = out.bounds.upper;

  const QpResult result = solveBoxQP(qp, {}, &lastCommand_);
  out.qpStatus = result.status;
  out.kktResidual = result.kktResidual;
  out.qpIterations = result.iterations;
  out.u = result.converged() ? result.solution : qp.clamp(lastCommand_);
  lastCommand_ = out.u;

  for (int k = 0; k < np; ++k) thrustCommand_[k].update(out.u[k], dt);
  return out;
}

}  // namespace jetfault
