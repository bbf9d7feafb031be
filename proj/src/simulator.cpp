#include "jetfault/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace jetfault {

void PlantConfig::validate() const {
  if (!(turbineTimeConstant > 0.0) || !(jointTrackingRate > 0.0) || !(shutdownTime > 0.0) ||
      !(quantizationStep > 0.0) || !(commandLead >= 0.0))
    throw std::invalid_argument("plant config: time constants, tracking rate and quantization step must be positive");
}

PlantState makePlantState(const RobotModel& model, const Configuration& q, const SystemVelocity& nu,
                          const VectorXd& thrust) {
  const int np = model.numThrusters();
  if (thrust.size() != np) throw std::invalid_argument("plant state: thrust dimension mismatch");
  PlantState s;
  s.q = q;
  s.nu = nu;
  s.thrust = thrust;
  s.rpm.resize(np);
  for (int k = 0; k < np; ++k) s.rpm[k] = ThrustRpmMap::of(model.thrusters()[k]).thrustToRpm(thrust[k]);
  s.failed.assign(np, false);
  s.offTimeConstant = VectorXd::Zero(np);
  return s;
}

PlantAcceleration plantAcceleration(const RobotModel& model, const PlantConfig& config, const Configuration& q,
                                    const SystemVelocity& nu, const VectorXd& thrust, const VectorXd& jointRate) {
  const int n = model.numJoints();
  const Kinematics kin = forwardKinematics(model, q);
  const DynamicsTerms dyn = dynamicsTerms(model, q, nu);
  VectorXd force = -dyn.coriolisMatrix * nu.stacked() - dyn.gravityVector;
  for (int k = 0; k < model.numThrusters(); ++k)
    force += thrusterJacobian(model, kin, k).transpose() * (thrust[k] * kin.thrusters[k].axis);

  // Joint accelerations are prescribed by the rate tracker; the base follows
  // from the unactuated rows and the torques from the actuated ones.
  const MatrixXd& m = dyn.massMatrix;
  const VectorXd sdd = config.jointTrackingRate * (jointRate - nu.jointVelocities);
  PlantAcceleration out;
  out.nuDot.resize(6 + n);
  const Vector6d baseAcc = m.topLeftCorner<6, 6>().ldlt().solve(force.head<6>() - m.topRightCorner(6, n) * sdd);
  out.nuDot << baseAcc, sdd;
  out.torque = m.bottomLeftCorner(n, 6) * baseAcc + m.bottomRightCorner(n, n) * sdd - force.tail(n);
  return out;
}

PlantState plantStep(const RobotModel& model, const PlantConfig& config, const PlantState& state,
                     const PlantCommand& command, double dt) {
  const int np = model.numThrusters();
  const int n = model.numJoints();
  if (command.thrust.size() != np || command.jointRate.size() != n)
    throw std::invalid_argument("plantStep: command dimension mismatch");

  const PlantAcceleration acc = plantAcceleration(model, config, state.q, state.nu, state.thrust, command.jointRate);
  PlantState next = state;
  next.nu = SystemVelocity::fromStacked(state.nu.stacked() + dt * acc.nuDot);
  next.q = integrate(state.q, next.nu, dt);
  next.q.baseRotation = orthonormalize(next.q.baseRotation);
  next.time = state.time + dt;

  const double lag = std::exp(-dt / config.turbineTimeConstant);
  for (int k = 0; k < np; ++k) {
    const ThrustRpmMap map = ThrustRpmMap::of(model.thrusters()[k]);
    if (state.failed[k]) {
      next.rpm[k] = state.offTimeConstant[k] > 0.0 ? state.rpm[k] * std::exp(-dt / state.offTimeConstant[k]) : 0.0;
    } else {
      const double target = map.thrustToRpm(std::clamp(command.thrust[k], 0.0, map.maxThrust));
      next.rpm[k] = target + (state.rpm[k] - target) * lag;
    }
    next.thrust[k] = map.rpmToThrust(std::clamp(next.rpm[k], 0.0, map.maxRpm));
  }

  const bool finite = next.nu.stacked().allFinite() && next.q.basePosition.allFinite() &&
                      next.q.baseRotation.allFinite() && next.q.jointPositions.allFinite() && next.rpm.allFinite();
  if (!finite) throw NonFiniteState("non-finite plant state at t = " + std::to_string(next.time));
  return next;
}

void injectFault(PlantState& state, int turbine, const PlantConfig& config) {
  if (turbine < 0 || turbine >= static_cast<int>(state.failed.size()))
    throw std::out_of_range("injectFault: turbine index out of range");
  state.failed[turbine] = true;
  const double rpm0 = state.rpm[turbine];
  // Reading floors to zero once rpm < step: rpm0 exp(-t_off / tau) = step.
  state.offTimeConstant[turbine] =
      rpm0 > config.quantizationStep ? config.shutdownTime / std::log(rpm0 / config.quantizationStep) : 0.0;
}

namespace {

struct Quintic {
  double s = 0.0, ds = 0.0, dds = 0.0, ddds = 0.0;
};

Quintic quintic(double time, double start, double duration) {
  Quintic q;
  const double tau = (time - start) / duration;
  if (tau <= 0.0) return q;
  if (tau >= 1.0) {
    q.s = 1.0;
    return q;
  }
  const double t2 = tau * tau, t3 = t2 * tau, t4 = t3 * tau, t5 = t4 * tau;
  q.s = 10 * t3 - 15 * t4 + 6 * t5;
  q.ds = (30 * t2 - 60 * t3 + 30 * t4) / duration;
  q.dds = (60 * tau - 180 * t2 + 120 * t3) / (duration * duration);
  q.ddds = (60 - 360 * tau + 360 * t2) / (duration * duration * duration);
  return q;
}

}  // namespace

TrajectorySample sampleTrajectory(const std::vector<TrajectorySegment>& segments, double time) {
  TrajectorySample out;
  for (const TrajectorySegment& seg : segments) {
    const Quintic q = quintic(time, seg.start, seg.duration);
    if (seg.kind == TrajectorySegment::Kind::Yaw) {
      out.yaw += seg.amount * q.s;
      out.yawRate += seg.amount * q.ds;
      continue;
    }
    const int axis = seg.kind == TrajectorySegment::Kind::Forward ? 0
                     : seg.kind == TrajectorySegment::Kind::Lateral ? 1
                                                                    : 2;
    out.position[axis] += seg.amount * q.s;
    out.velocity[axis] += seg.amount * q.ds;
    out.acceleration[axis] += seg.amount * q.dds;
    out.jerk[axis] += seg.amount * q.ddds;
  }
  return out;
}

int ScenarioSpec::ticks() const { return static_cast<int>(std::llround(duration / controlDt)); }

namespace {

Matrix3d blendRotation(const Matrix3d& from, const Matrix3d& to, double beta) {
  const Eigen::AngleAxisd delta(Matrix3d(from.transpose() * to));
  return from * Eigen::AngleAxisd(beta * delta.angle(), delta.axis()).toRotationMatrix();
}

VectorXd quantizeAll(const VectorXd& rpm, double step) {
  VectorXd out(rpm.size());
  for (Eigen::Index k = 0; k < rpm.size(); ++k) out[k] = quantizeRpm(std::max(rpm[k], 0.0), step);
  return out;
}

}  // namespace

TelemetryLog runScenario(const RobotModel& model, const ScenarioSpec& scenario, const RunOptions& options) {
  scenario.validate(model);
  const int np = model.numThrusters();
  const int n = model.numJoints();
  const double mass = model.totalMass();
  const double dt = scenario.controlDt;
  if (options.nominal.posture.size() != n || options.nominal.thrusts.size() != np)
    throw std::invalid_argument("runScenario: nominal reference does not match the model");

  std::vector<ThrustRpmMap> maps;
  for (const Thruster& t : model.thrusters()) maps.push_back(ThrustRpmMap::of(t));

  Configuration q0 = Configuration::zero(model);
  q0.basePosition = scenario.initialPosition;
  q0.baseRotation = options.nominal.attitude * rpyToRotation(scenario.initialAttitudeOffset);
  q0.jointPositions = options.nominal.posture;
  SystemVelocity nu0 = SystemVelocity::zero(model);
  nu0.baseLinear = scenario.initialVelocity;
  PlantState plant = makePlantState(model, q0, nu0, options.nominal.thrusts);
  const Vector3d com0 = forwardKinematics(model, q0).com;

  FlightController controller(model, scenario.gains, IntegralBoundSet::fromModel(model, scenario.minThrust),
                              options.nominal.thrusts);
  FaultDetector detector(maps, scenario.detector, options.nominal.thrusts);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TelemetryLog log;
  log.header = {{"format", "jetfault-telemetry/1"},
                {"scenario", scenario.name},
                {"seed", options.seed},
                {"model", model.name()},
                {"model_sha256", modelHash(model)},
                {"duration", scenario.duration},
                {"control_dt", scenario.controlDt},
                {"plant_dt", scenario.plantDt()},
                {"fault_turbine", scenario.faultTurbine ? model.thrusters()[*scenario.faultTurbine].name : ""},
                {"fault_time", scenario.faultTurbine ? scenario.faultTime : -1.0},
                {"rpm_noise", scenario.rpmNoise},
                {"velocity_noise", scenario.velocityNoise},
                {"fault_reference", options.fault.has_value()}};

  VectorXd lastRate = VectorXd::Zero(np);
  bool injected = false;
  const int ticks = scenario.ticks();
  log.rows.reserve(ticks + 1);
  try {
    for (int tick = 0; tick <= ticks; ++tick) {
      const double time = tick * dt;

      VectorXd rpmMeasured = plant.rpm;
      SystemVelocity nuMeasured = plant.nu;
      if (scenario.rpmNoise > 0.0)
        for (int k = 0; k < np; ++k) rpmMeasured[k] += scenario.rpmNoise * gauss(rng);
      if (scenario.velocityNoise > 0.0) {
        VectorXd v = nuMeasured.stacked();
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += scenario.velocityNoise * gauss(rng);
        nuMeasured = SystemVelocity::fromStacked(v);
      }
      const FaultStatus& status = detector.step(time, lastRate, rpmMeasured, dt);
      const std::optional<double> detected = detectionTime(status);
      if (detected && !log.detectionTime) log.detectionTime = *detected;
      for (const TurbineStatus& s : status)
        if (s.state == TurbineState::Off && !log.offTime) log.offTime = s.offTime;

      // Reference.
      const TrajectorySample traj = sampleTrajectory(scenario.segments, time);
      Matrix3d attitude = options.nominal.attitude;
      VectorXd posture = options.nominal.posture;
      if (options.fault && detected) {
        const double beta = smoothstep((time - *detected) / scenario.referenceBlend);
        attitude = blendRotation(options.nominal.attitude, options.fault->attitude, beta);
        posture = (1.0 - beta) * options.nominal.posture + beta * options.fault->posture;
      }
      ReferenceSample ref;
      ref.linearMomentum = mass * traj.velocity;
      ref.linearMomentumRate = mass * traj.acceleration;
      ref.linearMomentumAcceleration = mass * traj.jerk;
      ref.attitude = rpyToRotation(Vector3d(0.0, 0.0, traj.yaw)) * attitude;
      ref.angularVelocity = Vector3d(0.0, 0.0, traj.yawRate);
      ref.posture = posture;

      const VectorXd rpmQuantized = quantizeAll(rpmMeasured, scenario.detector.quantizationStep);
      VectorXd thrustEstimate(np);
      for (int k = 0; k < np; ++k)
        thrustEstimate[k] = maps[k].rpmToThrust(std::min(rpmQuantized[k], maps[k].maxRpm));
      const ControlOutput out =
          controller.step(time, ControllerInput{plant.q, nuMeasured, thrustEstimate}, ref, status, dt);
      lastRate = out.u.head(np);
      // Lead term cancels the turbine lag so that thrust follows the integral of Tdot*.
      VectorXd thrustCommand = controller.thrustCommand() + scenario.plant.commandLead * lastRate;
      for (int k = 0; k < np; ++k) thrustCommand[k] = std::clamp(thrustCommand[k], 0.0, maps[k].maxThrust);
      const PlantCommand command{thrustCommand, out.u.tail(n)};

      TelemetryRow row;
      row.time = time;
      row.position = plant.q.basePosition;
      row.rpy = rotationToRpy(plant.q.baseRotation);
      row.com = forwardKinematics(model, plant.q).com;
      row.comReference = com0 + traj.position;
      row.posture = plant.q.jointPositions;
      row.thrust = plant.thrust;
      row.thrustCommand = command.thrust;
      row.rpm = plant.rpm;
      row.rpmReference = detector.referenceRpm();
      row.rpmMeasured = rpmQuantized;
      for (const TurbineStatus& s : status) row.detectorState.push_back(static_cast<int>(s.state));
      row.momentumErrorNorm = out.momentumError.norm();
      row.linearMomentumErrorNorm = out.momentumError.head<3>().norm();
      row.angularMomentumErrorNorm = out.momentumError.tail<3>().norm();
      row.jointErrorNorm = out.jointError;
      row.weightLinear = out.weights.linear;
      row.weightAngular = out.weights.angular;
      row.qpStatus = static_cast<int>(out.qpStatus);
      row.qpIterations = out.qpIterations;
      row.kktResidual = out.kktResidual;
      log.rows.push_back(std::move(row));

      if (tick == ticks) break;
      for (int i = 0; i < scenario.plantStepsPerControl; ++i) {
        if (scenario.faultTurbine && !injected && plant.time >= scenario.faultTime - 1e-9) {
          injectFault(plant, *scenario.faultTurbine, scenario.plant);
          injected = true;
        }
        plant = plantStep(model, scenario.plant, plant, command, scenario.plantDt());
        // Re-anchor the clock to avoid accumulating rounding.
        plant.time = time + (i + 1) * scenario.plantDt();
      }
      if ((log.rows.back().com - log.rows.back().comReference).norm() > 50.0)
        throw NonFiniteState("diverged: CoM more than 50 m from its reference at t = " + std::to_string(time));
    }
  } catch (const NonFiniteState& e) {
    log.aborted = true;
    log.abortReason = e.what();
  }
  log.header["aborted"] = log.aborted;
  if (log.aborted) log.header["abort_reason"] = log.abortReason;
  return log;
}

}  // namespace jetfault
