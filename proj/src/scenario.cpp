#include <filesystem>
#include <fstream>

#include "jetfault/simulator.hpp"

namespace jetfault {

using nlohmann::json;

namespace {

json parseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError("", path + ": parse error: " + e.what());
  }
}

double number(const json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ModelError(path + "/" + key, "expected a number");
  return j[key].get<double>();
}

Vector3d vector3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ModelError(path, "expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

int thrusterByName(const RobotModel& model, const std::string& name, const std::string& path) {
  for (int k = 0; k < model.numThrusters(); ++k)
    if (model.thrusters()[k].name == name) return k;
  throw ModelError(path, "unknown thruster '" + name + "'");
}

std::string resolvePath(const std::string& baseDir, const std::string& file) {
  if (file.empty()) return file;
  const std::filesystem::path p(file);
  return p.is_absolute() ? file : (std::filesystem::path(baseDir) / p).lexically_normal().string();
}

void readGains(const json& c, ControllerGains& g, int numJoints) {
  const std::string path = "/controller";
  g.kp = Matrix3d::Identity() * number(c, "kp", g.kp(0, 0), path);
  g.kd = Matrix3d::Identity() * number(c, "kd", g.kd(0, 0), path);
  g.ki = Matrix3d::Identity() * number(c, "ki", g.ki(0, 0), path);
  g.kAttitude = number(c, "k_attitude", g.kAttitude, path);
  g.kAngularMomentum = number(c, "k_angular_momentum", g.kAngularMomentum, path);
  g.kAngularMomentumRate = number(c, "k_angular_momentum_rate", g.kAngularMomentumRate, path);
  if (c.contains("k_posture")) g.kPosture = VectorXd::Constant(numJoints, number(c, "k_posture", 2.0, path));
  g.weightLinear = number(c, "weight_linear", g.weightLinear, path);
  g.weightAngular = number(c, "weight_angular", g.weightAngular, path);
  g.weightPosture = number(c, "weight_posture", g.weightPosture, path);
  g.alpha = number(c, "alpha", g.alpha, path);
  g.scheduleRamp = number(c, "schedule_ramp", g.scheduleRamp, path);
  g.faultBoundRamp = number(c, "fault_bound_ramp", g.faultBoundRamp, path);
  g.integralLimit = number(c, "integral_limit", g.integralLimit, path);
}

TrajectorySegment::Kind segmentKind(const std::string& s, const std::string& path) {
  if (s == "vertical") return TrajectorySegment::Kind::Vertical;
  if (s == "forward") return TrajectorySegment::Kind::Forward;
  if (s == "lateral") return TrajectorySegment::Kind::Lateral;
  if (s == "yaw") return TrajectorySegment::Kind::Yaw;
  throw ModelError(path, "unknown segment type '" + s + "' (vertical, forward, lateral, yaw)");
}

}  // namespace

void ScenarioSpec::validate(const RobotModel& model) const {
  if (!(duration > 0.0) || !(controlDt > 0.0) || plantStepsPerControl < 1)
    throw std::invalid_argument("scenario: duration, control_dt and plant steps must be positive");
  if (faultTurbine) {
    if (*faultTurbine < 0 || *faultTurbine >= model.numThrusters())
      throw std::invalid_argument("scenario: fault turbine out of range");
    if (!(faultTime >= 0.0 && faultTime <= duration))
      throw std::invalid_argument("scenario: fault time outside the run");
  }
  if (rpmNoise < 0.0 || velocityNoise < 0.0) throw std::invalid_argument("scenario: negative noise level");
  if (repeats < 1) throw std::invalid_argument("scenario: repeats must be >= 1");
  if (!(referenceBlend > 0.0)) throw std::invalid_argument("scenario: reference_blend must be positive");
  for (const TrajectorySegment& s : segments)
    if (!(s.duration > 0.0) || s.start < 0.0) throw std::invalid_argument("scenario: bad trajectory segment");
  plant.validate();
  gains.validate(model.numJoints());
  detector.validate();
}

ScenarioSpec scenarioFromJson(const json& j, const RobotModel& model, const std::string& baseDir) {
  ScenarioSpec s;
  s.name = j.value("name", s.name);
  s.duration = number(j, "duration", s.duration, "");
  s.controlDt = number(j, "control_dt", s.controlDt, "");
  s.plantStepsPerControl = j.value("plant_steps_per_control", s.plantStepsPerControl);
  if (j.contains("initial_position")) s.initialPosition = vector3(j["initial_position"], "/initial_position");
  if (j.contains("initial_attitude_offset"))
    s.initialAttitudeOffset = vector3(j["initial_attitude_offset"], "/initial_attitude_offset");
  if (j.contains("initial_velocity")) s.initialVelocity = vector3(j["initial_velocity"], "/initial_velocity");
  if (j.contains("trajectory")) {
    for (std::size_t i = 0; i < j["trajectory"].size(); ++i) {
      const json& seg = j["trajectory"][i];
      const std::string path = "/trajectory/" + std::to_string(i);
      TrajectorySegment t;
      t.kind = segmentKind(seg.value("type", ""), path + "/type");
      t.start = number(seg, "start", 0.0, path);
      t.duration = number(seg, "duration", 1.0, path);
      t.amount = number(seg, "amount", 0.0, path);
      s.segments.push_back(t);
    }
  }
  if (j.contains("fault") && !j["fault"].is_null()) {
    const json& f = j["fault"];
    s.faultTurbine = thrusterByName(model, f.value("turbine", ""), "/fault/turbine");
    s.faultTime = number(f, "time", s.faultTime, "/fault");
  }
  if (j.contains("noise")) {
    s.rpmNoise = number(j["noise"], "rpm", 0.0, "/noise");
    s.velocityNoise = number(j["noise"], "velocity", 0.0, "/noise");
  }
  s.seed = j.value("seed", s.seed);
  s.repeats = j.value("repeats", s.repeats);
  s.referenceBlend = number(j, "reference_blend", s.referenceBlend, "");
  s.minThrust = number(j, "min_thrust", s.minThrust, "");
  if (j.contains("plant")) {
    const json& p = j["plant"];
    s.plant.turbineTimeConstant = number(p, "turbine_time_constant", s.plant.turbineTimeConstant, "/plant");
    s.plant.jointTrackingRate = number(p, "joint_tracking_rate", s.plant.jointTrackingRate, "/plant");
    s.plant.shutdownTime = number(p, "shutdown_time", s.plant.shutdownTime, "/plant");
    s.plant.commandLead = number(p, "command_lead", s.plant.commandLead, "/plant");
  }
  if (j.contains("controller")) readGains(j["controller"], s.gains, model.numJoints());
  if (j.contains("detector")) {
    const json& d = j["detector"];
    s.detector.rpmThreshold = number(d, "rpm_threshold", s.detector.rpmThreshold, "/detector");
    s.detector.holdTime = number(d, "hold_time", s.detector.holdTime, "/detector");
    s.detector.idleRpm = number(d, "idle_rpm", s.detector.idleRpm, "/detector");
    s.detector.quantizationStep = number(d, "quantization_step", s.detector.quantizationStep, "/detector");
  }
  s.plant.quantizationStep = s.detector.quantizationStep;
  if (j.contains("references")) {
    s.nominalReference = resolvePath(baseDir, j["references"].value("nominal", ""));
    s.faultReference = resolvePath(baseDir, j["references"].value("fault", ""));
  }
  try {
    s.validate(model);
  } catch (const std::invalid_argument& e) {
    throw ModelError("", e.what());
  }
  return s;
}

ScenarioSpec loadScenario(const std::string& path, const RobotModel& model) {
  const json j = parseFile(path);
  return scenarioFromJson(j, model, std::filesystem::path(path).parent_path().string());
}

ReferenceSet resolveReference(const std::string& path, const RobotModel& model) {
  const json j = parseFile(path);
  if (j.contains("format")) return referenceSetFromJson(j, model);
  const ReferenceSolution sol = solveReferenceProblem(model, problemFromJson(j, model));
  if (!sol.report.converged) throw std::runtime_error("reference problem " + path + " did not converge");
  return toReferenceSet(model, sol.x);
}

}  // namespace jetfault
