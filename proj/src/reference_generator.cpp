#include "jetfault/reference_generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace jetfault {

using nlohmann::json;

namespace {

constexpr double kConstraintScale = 0.01;  // m^2, typical sphere clearance

}  // namespace

Vector3d variableRpy(const VectorXd& x) { return x.head<3>(); }

VectorXd variablePosture(const RobotModel& model, const VectorXd& x) { return x.segment(3, model.numJoints()); }

VectorXd variableThrusts(const RobotModel& model, const VectorXd& x) {
  return x.segment(3 + model.numJoints(), model.numThrusters());
}

VectorXd makeVariable(const Vector3d& rpy, const VectorXd& posture, const VectorXd& thrusts) {
  VectorXd x(3 + posture.size() + thrusts.size());
  x << rpy, posture, thrusts;
  return x;
}

void ReferenceProblem::validate(const RobotModel& model) {
  const int d = 3 + model.numJoints() + model.numThrusters();
  if (initialGuess.size() != d || weights.size() != d || lower.size() != d || upper.size() != d)
    throw std::invalid_argument("reference problem: variable dimension must be " + std::to_string(d));
  if (faulty.empty()) faulty.assign(model.numThrusters(), false);
  if (static_cast<int>(faulty.size()) != model.numThrusters())
    throw std::invalid_argument("reference problem: fault mask size mismatch");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("reference problem: W_x must be PSD");
  if (!(manipulabilityWeight >= 0.0)) throw std::invalid_argument("reference problem: W_Lambda must be >= 0");
  if (!(cone.halfAngleDeg > 0.0 && cone.halfAngleDeg < 45.0))
    throw std::invalid_argument("reference problem: cone half-angle must be in (0, 45) deg");
  if (cone.linesPerCone < 1 || !(cone.length > 0.0))
    throw std::invalid_argument("reference problem: cone needs >= 1 line and positive length");
  for (int k = 0; k < model.numThrusters(); ++k) {
    if (!faulty[k]) continue;
    const int i = 3 + model.numJoints() + k;
    lower[i] = upper[i] = 0.0;
  }
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("reference problem: lower > upper");
}

ReferenceProblem ReferenceProblem::defaults(const RobotModel& model, const VectorXd& posture,
                                            const std::vector<bool>& faulty) {
  const int n = model.numJoints();
  const int np = model.numThrusters();
  ReferenceProblem p;
  p.faulty = faulty.empty() ? std::vector<bool>(np, false) : faulty;
  const int healthy = static_cast<int>(std::count(p.faulty.begin(), p.faulty.end(), false));
  VectorXd thrusts = VectorXd::Zero(np);
  for (int k = 0; k < np; ++k)
    if (!p.faulty[k]) thrusts[k] = model.totalMass() * model.gravity() / std::max(healthy, 1);
  p.initialGuess = makeVariable(Vector3d::Zero(), posture, thrusts);
  p.weights = VectorXd::Ones(3 + n + np);
  p.weights.tail(np).setConstant(1e-4);
  p.lower.resize(3 + n + np);
  p.upper.resize(3 + n + np);
  p.lower.head<3>() << -0.6, -0.6, 0.0;
  p.upper.head<3>() << 0.6, 0.6, 0.0;
  for (int j = 0; j < n; ++j) {
    p.lower[3 + j] = model.joints()[j].lowerLimit;
    p.upper[3 + j] = model.joints()[j].upperLimit;
  }
  for (int k = 0; k < np; ++k) {
    p.lower[3 + n + k] = 0.0;
    p.upper[3 + n + k] = model.thrusters()[k].maxThrust;
  }
  p.validate(model);
  p.initialGuess = p.initialGuess.cwiseMax(p.lower).cwiseMin(p.upper);
  return p;
}

Configuration configurationFromVariable(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x) {
  Configuration q = Configuration::zero(model);
  q.basePosition = problem.basePosition;
  q.baseRotation = rpyToRotation(variableRpy(x));
  q.jointPositions = variablePosture(model, x);
  return q;
}

Vector6d equilibriumResidual(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x) {
  const ThrustMatrix tm = thrustMatrix(model, configurationFromVariable(model, problem, x));
  return tm.matrix * variableThrusts(model, x) + tm.gravityWrench;
}

double equilibriumConstraint(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x) {
  return equilibriumResidual(model, problem, x).squaredNorm();
}

namespace {

double manipulabilityAt(const RobotModel& model, const Configuration& q, const VectorXd& thrusts,
                        const std::vector<bool>& faulty) {
  const MomentumAccelerationMap lambda = momentumAccelerationMap(model, q, SystemVelocity::zero(model), thrusts);
  const int np = model.numThrusters();
  Matrix6Xd reduced(6, lambda.map.cols());
  int c = 0;
  for (int i = 0; i < lambda.map.cols(); ++i)
    if (i >= np || !faulty[i]) reduced.col(c++) = lambda.map.col(i);
  reduced.conservativeResize(6, c);
  return (reduced * reduced.transpose()).determinant();
}

}  // namespace

double manipulabilityDeterminant(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x) {
  return manipulabilityAt(model, configurationFromVariable(model, problem, x), variableThrusts(model, x),
                          problem.faulty);
}

double referenceObjective(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x) {
  const VectorXd dx = x - problem.initialGuess;
  double cost = 0.5 * dx.dot(problem.weights.asDiagonal() * dx);
  if (problem.manipulabilityWeight > 0.0) {
    const double det = manipulabilityDeterminant(model, problem, x);
    cost += problem.manipulabilityWeight / std::sqrt(std::max(det, kMinManipulability));
  }
  return cost;
}

VectorXd referenceObjectiveGradient(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x,
                                    double step) {
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double fp = referenceObjective(model, problem, probe);
    probe[i] = x[i] - step;
    const double fm = referenceObjective(model, problem, probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

std::vector<SpherePair> crossLinkSpherePairs(const RobotModel& model) {
  std::vector<SpherePair> pairs;
  const auto& links = model.links();
  for (int a = 0; a < model.numLinks(); ++a)
    for (int b = a + 1; b < model.numLinks(); ++b)
      for (int i = 0; i < static_cast<int>(links[a].spheres.size()); ++i)
        for (int j = 0; j < static_cast<int>(links[b].spheres.size()); ++j) pairs.push_back({a, i, b, j});
  return pairs;
}

namespace {

Vector3d sphereCenter(const RobotModel& model, const Kinematics& kin, int link, int sphere) {
  const Pose& pose = kin.links[link];
  return pose.position + pose.rotation * model.links()[link].spheres[sphere].center;
}

}  // namespace

VectorXd selfCollisionConstraints(const RobotModel& model, const Kinematics& kin) {
  const std::vector<SpherePair> pairs = crossLinkSpherePairs(model);
  VectorXd h(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SpherePair& p = pairs[i];
    const double ra = model.links()[p.linkA].spheres[p.sphereA].radius;
    const double rb = model.links()[p.linkB].spheres[p.sphereB].radius;
    const Vector3d d = sphereCenter(model, kin, p.linkA, p.sphereA) - sphereCenter(model, kin, p.linkB, p.sphereB);
    h[i] = d.squaredNorm() - (ra + rb) * (ra + rb);
  }
  return h;
}

double lineSphereClearance(const Vector3d& p, const Vector3d& a, const Vector3d& c, double rho) {
  const Vector3d d = p - c;
  const Matrix3d projector = Matrix3d::Identity() - a * a.transpose();
  return d.dot(projector * d) - rho * rho;
}

std::vector<Vector3d> coneLines(const Vector3d& thrustAxis, const ConeGeometry& cone) {
  const Vector3d exhaust = -thrustAxis.normalized();
  // Any unit vector orthogonal to the exhaust direction, chosen deterministically.
  Vector3d helper = std::abs(exhaust.x()) < 0.9 ? Vector3d::UnitX() : Vector3d::UnitY();
  const Vector3d u = exhaust.cross(helper).normalized();
  const Vector3d v = exhaust.cross(u);
  const double half = cone.halfAngleDeg * std::numbers::pi / 180.0;
  std::vector<Vector3d> lines;
  for (int i = 0; i < cone.linesPerCone; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / cone.linesPerCone;
    lines.push_back(std::cos(half) * exhaust + std::sin(half) * (std::cos(phi) * u + std::sin(phi) * v));
  }
  return lines;
}

VectorXd jetCollisionConstraints(const RobotModel& model, const Kinematics& kin, const ConeGeometry& cone,
                                 const std::vector<bool>& faulty) {
  std::vector<std::pair<Vector3d, double>> spheres;
  for (int l = 0; l < model.numLinks(); ++l)
    for (int s = 0; s < static_cast<int>(model.links()[l].spheres.size()); ++s)
      if (model.links()[l].spheres[s].lowerBody)
        spheres.emplace_back(sphereCenter(model, kin, l, s), model.links()[l].spheres[s].radius);
  std::vector<double> h;
  for (int k = 0; k < model.numThrusters(); ++k) {
    if (!faulty.empty() && faulty[k]) continue;
    for (const Vector3d& line : coneLines(kin.thrusters[k].axis, cone))
      for (const auto& [center, radius] : spheres)
        h.push_back(lineSphereClearance(kin.thrusters[k].point, line, center, radius));
  }
  return Eigen::Map<VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
}

ReferenceReport evaluateReference(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x) {
  ReferenceReport r;
  const Configuration q = configurationFromVariable(model, problem, x);
  const Kinematics kin = forwardKinematics(model, q);
  r.objective = referenceObjective(model, problem, x);
  r.equilibrium = equilibriumConstraint(model, problem, x);
  const VectorXd self = selfCollisionConstraints(model, kin);
  const VectorXd jet = jetCollisionConstraints(model, kin, problem.cone, problem.faulty);
  r.minSelfCollision = self.size() ? self.minCoeff() : std::numeric_limits<double>::infinity();
  r.minJetCollision = jet.size() ? jet.minCoeff() : std::numeric_limits<double>::infinity();
  r.boundViolation = std::max((problem.lower - x).maxCoeff(), (x - problem.upper).maxCoeff());
  r.boundViolation = std::max(r.boundViolation, 0.0);
  r.manipulability = manipulabilityDeterminant(model, problem, x);
  return r;
}

namespace {

// Augmented Lagrangian in scaled variables y = x / scale.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const RobotModel& model, const ReferenceProblem& problem, const RefGenConfig& config)
      : model_(model), problem_(problem), config_(config) {
    const int n = model.numJoints();
    scale_ = VectorXd::Ones(problem.size());
    for (int k = 0; k < model.numThrusters(); ++k) scale_[3 + n + k] = 0.5 * model.thrusters()[k].maxThrust;
    weightScale_ = 1.0 / (model.totalMass() * model.gravity());
    const VectorXd h = constraints(problem.initialGuess).second;
    multipliersEq_ = Vector6d::Zero();
    multipliersIneq_ = VectorXd::Zero(h.size());
    penalty_ = config.initialPenalty;
  }

  const VectorXd& scale() const { return scale_; }

  // Scaled equality residual and scaled inequality slack (>= 0 when feasible).
  std::pair<Vector6d, VectorXd> constraints(const VectorXd& x) const {
    const Configuration q = configurationFromVariable(model_, problem_, x);
    const Kinematics kin = forwardKinematics(model_, q);
    const ThrustMatrix tm = thrustMatrix(model_, kin);
    const Vector6d c = (tm.matrix * variableThrusts(model_, x) + tm.gravityWrench) * weightScale_;
    const VectorXd self = selfCollisionConstraints(model_, kin);
    const VectorXd jet = jetCollisionConstraints(model_, kin, problem_.cone, problem_.faulty);
    VectorXd g(self.size() + jet.size());
    g << self, jet;
    g = (g.array() - config_.collisionMargin) / kConstraintScale;
    return {c, g};
  }

  double value(const VectorXd& y) const {
    const VectorXd x = y.cwiseProduct(scale_);
    const auto [c, g] = constraints(x);
    double v = referenceObjective(model_, problem_, x);
    v += multipliersEq_.dot(c) + 0.5 * penalty_ * c.squaredNorm();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double t = std::max(0.0, multipliersIneq_[i] - penalty_ * g[i]);
      v += (t * t - multipliersIneq_[i] * multipliersIneq_[i]) / (2.0 * penalty_);
    }
    return v;
  }

  VectorXd gradient(const VectorXd& y) const {
    const double h = config_.finiteDifferenceStep;
    VectorXd g(y.size());
    VectorXd probe = y;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      probe[i] = y[i] + h;
      const double fp = value(probe);
      probe[i] = y[i] - h;
      const double fm = value(probe);
      probe[i] = y[i];
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  }

  // Multiplier update; returns the scaled constraint violation before it.
  double update(const VectorXd& x) {
    const auto [c, g] = constraints(x);
    const double violation = std::max(c.cwiseAbs().maxCoeff(), g.size() ? std::max(0.0, -g.minCoeff()) : 0.0);
    multipliersEq_ += penalty_ * c;
    multipliersIneq_ = (multipliersIneq_ - penalty_ * g).cwiseMax(0.0);
    return violation;
  }

  void increasePenalty() { penalty_ = std::min(penalty_ * 10.0, 1e9); }

 private:
  const RobotModel& model_;
  const ReferenceProblem& problem_;
  const RefGenConfig& config_;
  VectorXd scale_;
  double weightScale_ = 1.0;
  Vector6d multipliersEq_;
  VectorXd multipliersIneq_;
  double penalty_ = 10.0;
};

// Projected BFGS on the box [lo, hi] in scaled variables.
int minimizeBox(const AugmentedLagrangian& al, VectorXd& y, const VectorXd& lo, const VectorXd& hi, int maxIterations,
                double tolerance) {
  const auto d = y.size();
  auto clamp = [&](const VectorXd& v) { return VectorXd(v.cwiseMax(lo).cwiseMin(hi)); };
  MatrixXd inverseHessian = MatrixXd::Identity(d, d);
  bool identity = true;
  double f = al.value(y);
  VectorXd g = al.gradient(y);
  int it = 0;
  for (; it < maxIterations; ++it) {
    if ((y - clamp(y - g)).cwiseAbs().maxCoeff() <= tolerance) break;
    std::vector<bool> free(d);
    for (Eigen::Index i = 0; i < d; ++i)
      free[i] = !((y[i] <= lo[i] && g[i] > 0.0) || (y[i] >= hi[i] && g[i] < 0.0));
    VectorXd direction = VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!free[i]) continue;
      for (Eigen::Index j = 0; j < d; ++j)
        if (free[j]) direction[i] -= inverseHessian(i, j) * g[j];
    }
    if (g.dot(direction) >= 0.0) {
      inverseHessian.setIdentity();
      identity = true;
      direction = -g;
    }
    double step = 1.0;
    VectorXd trial;
    double ft = 0.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      trial = clamp(y + step * direction);
      ft = al.value(trial);
      if (ft <= f + 1e-4 * g.dot(trial - y)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || (trial - y).cwiseAbs().maxCoeff() == 0.0) {
      if (identity) break;
      inverseHessian.setIdentity();
      identity = true;
      continue;
    }
    const VectorXd gt = al.gradient(trial);
    const VectorXd s = trial - y;
    const VectorXd yk = gt - g;
    const double sy = s.dot(yk);
    if (sy > 1e-12 * s.norm() * yk.norm()) {
      if (identity) inverseHessian *= sy / yk.squaredNorm();
      const double rho = 1.0 / sy;
      const MatrixXd eye = MatrixXd::Identity(d, d);
      inverseHessian = (eye - rho * s * yk.transpose()) * inverseHessian * (eye - rho * yk * s.transpose()) +
                       rho * s * s.transpose();
      identity = false;
    }
    y = trial;
    f = ft;
    g = gt;
  }
  return it;
}

}  // namespace

ReferenceSolution solveReferenceProblem(const RobotModel& model, const ReferenceProblem& problemIn,
                                        const RefGenConfig& config) {
  ReferenceProblem problem = problemIn;
  problem.validate(model);
  AugmentedLagrangian al(model, problem, config);
  const VectorXd& scale = al.scale();
  const VectorXd lo = problem.lower.cwiseQuotient(scale);
  const VectorXd hi = problem.upper.cwiseQuotient(scale);
  VectorXd y = problem.initialGuess.cwiseQuotient(scale).cwiseMax(lo).cwiseMin(hi);

  ReferenceSolution out;
  double previousViolation = std::numeric_limits<double>::infinity();
  VectorXd previousY = y;
  for (int outer = 0; outer < config.maxOuterIterations; ++outer) {
    out.report.innerIterations += minimizeBox(al, y, lo, hi, config.maxInnerIterations, config.innerTolerance);
    out.report.outerIterations = outer + 1;
    const VectorXd x = y.cwiseProduct(scale);
    const ReferenceReport r = evaluateReference(model, problem, x);
    const bool feasible = r.equilibrium <= config.equilibriumTolerance &&
                          r.minSelfCollision >= -config.collisionTolerance &&
                          r.minJetCollision >= -config.collisionTolerance;
    const double moved = (y - previousY).cwiseAbs().maxCoeff();
    previousY = y;
    if (feasible && outer > 0 && moved <= 1e-7) {
      out.report.converged = true;
      break;
    }
    const double violation = al.update(x);
    if (violation > 0.25 * previousViolation) al.increasePenalty();
    previousViolation = violation;
  }
  out.x = y.cwiseProduct(scale).cwiseMax(problem.lower).cwiseMin(problem.upper);
  const ReferenceReport final = evaluateReference(model, problem, out.x);
  out.report.objective = final.objective;
  out.report.equilibrium = final.equilibrium;
  out.report.minSelfCollision = final.minSelfCollision;
  out.report.minJetCollision = final.minJetCollision;
  out.report.boundViolation = final.boundViolation;
  out.report.manipulability = final.manipulability;
  out.report.converged = out.report.converged ||
                         (final.equilibrium <= config.equilibriumTolerance &&
                          final.minSelfCollision >= -config.collisionTolerance &&
                          final.minJetCollision >= -config.collisionTolerance);
  return out;
}

ReferenceSet toReferenceSet(const RobotModel& model, const VectorXd& x) {
  ReferenceSet r;
  r.attitude = rpyToRotation(variableRpy(x));
  r.posture = variablePosture(model, x);
  r.thrusts = variableThrusts(model, x);
  return r;
}

namespace {

VectorXd vectorField(const json& j, const std::string& path, Eigen::Index expected) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected)
    throw ModelError(path, "expected an array of " + std::to_string(expected) + " numbers");
  VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    if (!j[i].is_number()) throw ModelError(path + "/" + std::to_string(i), "expected a number");
    v[i] = j[i].get<double>();
  }
  return v;
}

json toJson(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int thrusterIndex(const RobotModel& model, const std::string& name, const std::string& path) {
  for (int k = 0; k < model.numThrusters(); ++k)
    if (model.thrusters()[k].name == name) return k;
  throw ModelError(path, "unknown thruster '" + name + "'");
}

}  // namespace

ReferenceProblem problemFromJson(const json& j, const RobotModel& model) {
  const int n = model.numJoints();
  const int np = model.numThrusters();
  std::vector<bool> faulty(np, false);
  if (j.contains("fault")) {
    for (std::size_t i = 0; i < j["fault"].size(); ++i)
      faulty[thrusterIndex(model, j["fault"][i].get<std::string>(), "/fault/" + std::to_string(i))] = true;
  }
  VectorXd posture = VectorXd::Zero(n);
  if (j.contains("initial_guess") && j["initial_guess"].contains("posture"))
    posture = vectorField(j["initial_guess"]["posture"], "/initial_guess/posture", n);
  ReferenceProblem p = ReferenceProblem::defaults(model, posture, faulty);
  if (j.contains("initial_guess")) {
    const json& g = j["initial_guess"];
    if (g.contains("rpy")) p.initialGuess.head<3>() = vectorField(g["rpy"], "/initial_guess/rpy", 3);
    if (g.contains("thrusts")) p.initialGuess.tail(np) = vectorField(g["thrusts"], "/initial_guess/thrusts", np);
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    if (w.contains("rpy")) p.weights.head<3>().setConstant(w["rpy"].get<double>());
    if (w.contains("posture")) p.weights.segment(3, n).setConstant(w["posture"].get<double>());
    if (w.contains("thrusts")) p.weights.tail(np).setConstant(w["thrusts"].get<double>());
  }
  if (j.contains("manipulability_weight")) p.manipulabilityWeight = j["manipulability_weight"].get<double>();
  if (j.contains("rpy_bounds")) {
    p.lower.head<3>() = vectorField(j["rpy_bounds"]["lower"], "/rpy_bounds/lower", 3);
    p.upper.head<3>() = vectorField(j["rpy_bounds"]["upper"], "/rpy_bounds/upper", 3);
  }
  if (j.contains("min_thrust")) {
    const double t = j["min_thrust"].get<double>();
    for (int k = 0; k < np; ++k) p.lower[3 + n + k] = t;
  }
  if (j.contains("cone")) {
    const json& c = j["cone"];
    p.cone.halfAngleDeg = c.value("half_angle_deg", p.cone.halfAngleDeg);
    p.cone.linesPerCone = c.value("lines", p.cone.linesPerCone);
    p.cone.length = c.value("length", p.cone.length);
  }
  if (j.contains("base_position")) p.basePosition = vectorField(j["base_position"], "/base_position", 3);
  try {
    p.validate(model);
  } catch (const std::invalid_argument& e) {
    throw ModelError("", e.what());
  }
  p.initialGuess = p.initialGuess.cwiseMax(p.lower).cwiseMin(p.upper);
  return p;
}

ReferenceProblem loadProblem(const std::string& path, const RobotModel& model) {
  std::ifstream in(path);
  if (!in) throw ModelError("", "cannot open problem file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError("", std::string("parse error: ") + e.what());
  }
  return problemFromJson(j, model);
}

json referenceSetToJson(const RobotModel& model, const ReferenceSet& refs) {
  json j;
  j["format"] = "jetfault-reference/1";
  j["model"] = model.name();
  j["rpy"] = toJson(rotationToRpy(refs.attitude));
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(toJson(refs.attitude.row(r).transpose()));
  j["attitude"] = rows;
  j["posture"] = toJson(refs.posture);
  j["thrusts"] = toJson(refs.thrusts);
  return j;
}

ReferenceSet referenceSetFromJson(const json& j, const RobotModel& model) {
  ReferenceSet r;
  if (!j.contains("attitude") || !j.contains("posture") || !j.contains("thrusts"))
    throw ModelError("", "reference file needs attitude, posture and thrusts");
  for (int row = 0; row < 3; ++row)
    r.attitude.row(row) = vectorField(j["attitude"][row], "/attitude/" + std::to_string(row), 3).transpose();
  if (!isRotation(r.attitude, 1e-9)) throw ModelError("/attitude", "not a rotation matrix");
  r.posture = vectorField(j["posture"], "/posture", model.numJoints());
  r.thrusts = vectorField(j["thrusts"], "/thrusts", model.numThrusters());
  return r;
}

json reportToJson(const ReferenceReport& r) {
  return json{{"objective", r.objective},
              {"equilibrium", r.equilibrium},
              {"min_self_collision", r.minSelfCollision},
              {"min_jet_collision", r.minJetCollision},
              {"bound_violation", r.boundViolation},
              {"manipulability", r.manipulability},
              {"outer_iterations", r.outerIterations},
              {"inner_iterations", r.innerIterations},
              {"converged", r.converged}};
}

}  // namespace jetfault
