#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "jetfault/fault_detection.hpp"
#include "jetfault/flight_controller.hpp"
#include "jetfault/reference_generator.hpp"

namespace jetfault {

struct PlantConfig {
  double turbineTimeConstant = 0.15;  // s, first-order RPM lag
  double jointTrackingRate = 50.0;    // 1/s, bandwidth of the joint-rate tracker
  double shutdownTime = 0.8;          // s from fault to an idle reading
  double quantizationStep = 100.0;    // RPM, used to place the idle crossing
  double commandLead = 0.15;          // s, thrust command = integral of Tdot* + lead * Tdot*

  void validate() const;
};

struct PlantState {
  Configuration q;
  SystemVelocity nu;
  VectorXd thrust;
  VectorXd rpm;
  double time = 0.0;
  std::vector<bool> failed;
  VectorXd offTimeConstant;  // spool-down time constant of failed turbines
};

/// Turbines settled at `thrust` (RPM from the static map).
PlantState makePlantState(const RobotModel& model, const Configuration& q, const SystemVelocity& nu,
                          const VectorXd& thrust);

struct PlantCommand {
  VectorXd thrust;     // N
  VectorXd jointRate;  // rad/s
};

class NonFiniteState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generalized acceleration under the given thrusts with the joints tracking
/// `jointRate` at the configured bandwidth; also returns the joint torques.
struct PlantAcceleration {
  VectorXd nuDot;
  VectorXd torque;
};
PlantAcceleration plantAcceleration(const RobotModel& model, const PlantConfig& config, const Configuration& q,
                                    const SystemVelocity& nu, const VectorXd& thrust, const VectorXd& jointRate);

/// Semi-implicit Euler: velocity first, then configuration with the new
/// velocity. Turbines integrate their lag exactly over dt. Throws
/// NonFiniteState.
PlantState plantStep(const RobotModel& model, const PlantConfig& config, const PlantState& state,
                     const PlantCommand& command, double dt = 1e-3);

/// From now on turbine k ignores commands and spools down so that its
/// quantized reading reaches idle `shutdownTime` later.
void injectFault(PlantState& state, int turbine, const PlantConfig& config);

// Scenario.

struct TrajectorySegment {
  enum class Kind { Vertical, Forward, Lateral, Yaw };
  Kind kind = Kind::Vertical;
  double start = 0.0;
  double duration = 1.0;
  double amount = 0.0;  // m, or rad for Yaw
};

/// Quintic rest-to-rest profiles summed over the segments.
struct TrajectorySample {
  Vector3d position = Vector3d::Zero();  // offset from the start
  Vector3d velocity = Vector3d::Zero();
  Vector3d acceleration = Vector3d::Zero();
  Vector3d jerk = Vector3d::Zero();
  double yaw = 0.0;
  double yawRate = 0.0;
};
TrajectorySample sampleTrajectory(const std::vector<TrajectorySegment>& segments, double time);

struct ScenarioSpec {
  std::string name = "scenario";
  double duration = 40.0;
  double controlDt = 0.01;
  int plantStepsPerControl = 10;
  Vector3d initialPosition = Vector3d::Zero();
  Vector3d initialAttitudeOffset = Vector3d::Zero();  // rpy applied on top of the nominal attitude
  Vector3d initialVelocity = Vector3d::Zero();        // base linear velocity at t = 0
  std::vector<TrajectorySegment> segments;
  std::optional<int> faultTurbine;
  double faultTime = 15.0;
  double rpmNoise = 0.0;       // RPM, before quantization
  double velocityNoise = 0.0;  // on every component of nu
  std::uint64_t seed = 1;
  int repeats = 1;
  double referenceBlend = 2.0;  // s, nominal -> fault reference after detection
  double minThrust = 0.0;
  PlantConfig plant;
  ControllerGains gains;
  TurbineHealthConfig detector;
  std::string nominalReference;  // reference or problem file
  std::string faultReference;    // reference or problem file; empty = none

  double plantDt() const { return controlDt / plantStepsPerControl; }
  int ticks() const;
  void validate(const RobotModel& model) const;
};

ScenarioSpec scenarioFromJson(const nlohmann::json& j, const RobotModel& model, const std::string& baseDir = ".");
ScenarioSpec loadScenario(const std::string& path, const RobotModel& model);

/// A reference file as written by referenceSetToJson, or a problem file that
/// is solved on the spot. Throws if the solve does not converge.
ReferenceSet resolveReference(const std::string& path, const RobotModel& model);

// Telemetry.

struct TelemetryRow {
  double time = 0.0;
  Vector3d position;
  Vector3d rpy;
  Vector3d com;
  Vector3d comReference;
  VectorXd posture;
  VectorXd thrust;
  VectorXd thrustCommand;
  VectorXd rpm;
  VectorXd rpmReference;
  VectorXd rpmMeasured;
  std::vector<int> detectorState;
  double momentumErrorNorm = 0.0;
  double linearMomentumErrorNorm = 0.0;
  double angularMomentumErrorNorm = 0.0;
  double jointErrorNorm = 0.0;
  double weightLinear = 0.0;
  double weightAngular = 0.0;
  int qpStatus = 0;
  int qpIterations = 0;
  double kktResidual = 0.0;
};

struct TelemetryLog {
  nlohmann::json header;
  std::vector<TelemetryRow> rows;
  bool aborted = false;
  std::string abortReason;
  std::optional<double> detectionTime;
  std::optional<double> offTime;
};

struct RunOptions {
  ReferenceSet nominal;
  std::optional<ReferenceSet> fault;  // swapped in on detection when set
  std::uint64_t seed = 1;
};

TelemetryLog runScenario(const RobotModel& model, const ScenarioSpec& scenario, const RunOptions& options);

std::vector<std::string> telemetryColumns(const RobotModel& model);
void writeTelemetryCsv(const RobotModel& model, const TelemetryLog& log, std::ostream& out);

/// Hex SHA-256 of the canonical model JSON.
std::string modelHash(const RobotModel& model);

// Run metrics.

struct RunMetrics {
  double momentumErrorIntegral = 0.0;  // integral of the momentum error norm over the run
  double maxMomentumError = 0.0;
  std::optional<double> recoveryTime;  // after detection, see evaluateRun
  bool jointErrorBounded = true;
  double finalJointError = 0.0;
  double finalPositionError = 0.0;  // CoM tracking at the end of the script
  bool completed = false;
};

/// Recovery: smallest r >= 0 with the momentum error below `threshold` on
/// the whole of [t_d + r, t_d + r + 1]. Joint error bounded: stays under
/// `jointBound` and is not monotonically increasing over the final 10 s.
RunMetrics evaluateRun(const TelemetryLog& log, double threshold, double jointBound = 1.0);

inline constexpr double kHoverMomentumThreshold = 4.0;

}  // namespace jetfault
