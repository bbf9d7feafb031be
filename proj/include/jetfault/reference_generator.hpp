#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "jetfault/flight_controller.hpp"
#include "jetfault/momentum.hpp"

namespace jetfault {

/// Exhaust cone discretization: lines at `halfAngleDeg` around the negated
/// thrust axis, starting at the nozzle.
struct ConeGeometry {
  double halfAngleDeg = 10.0;
  int linesPerCone = 8;
  double length = 2.0;  // reported/plotted only; the constraint uses the full line
};

/// x = (rpy_B, s, T). Yaw is part of x but usually pinned by its bounds since
/// the hover problem is invariant to it.
struct ReferenceProblem {
  VectorXd initialGuess;
  VectorXd weights;  // diagonal of W_x
  double manipulabilityWeight = 1.0;
  VectorXd lower;
  VectorXd upper;
  std::vector<bool> faulty;  // per thruster
  ConeGeometry cone;
  Vector3d basePosition = Vector3d(0.0, 0.0, 1.0);

  int size() const { return static_cast<int>(initialGuess.size()); }
  /// Throws std::invalid_argument. Also pins faulty thrust bounds to 0.
  void validate(const RobotModel& model);

  /// x0 = zero attitude, given posture, equal thrusts m g / (healthy count);
  /// bounds from the model, roll/pitch within +-0.6 rad, yaw pinned at 0.
  static ReferenceProblem defaults(const RobotModel& model, const VectorXd& posture,
                                   const std::vector<bool>& faulty = {});
};

Vector3d variableRpy(const VectorXd& x);
VectorXd variablePosture(const RobotModel& model, const VectorXd& x);
VectorXd variableThrusts(const RobotModel& model, const VectorXd& x);
VectorXd makeVariable(const Vector3d& rpy, const VectorXd& posture, const VectorXd& thrusts);

Configuration configurationFromVariable(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x);

/// A(q(x)) T + F_G.
Vector6d equilibriumResidual(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x);
/// |Ldot|^2.
double equilibriumConstraint(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x);

/// det(Lambda Lambda^T) of the static momentum acceleration map, faulty
/// thrust columns removed.
double manipulabilityDeterminant(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x);

inline constexpr double kMinManipulability = 1e-12;

/// 0.5 |x - x0|^2_W + W_Lambda / sqrt(det). Below kMinManipulability the
/// determinant is floored, giving a large finite cost.
double referenceObjective(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x);

/// Central finite-difference gradient of referenceObjective.
VectorXd referenceObjectiveGradient(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x,
                                    double step = 1e-6);

struct SpherePair {
  int linkA, sphereA, linkB, sphereB;
};

/// All sphere pairs on distinct links, in a fixed order.
std::vector<SpherePair> crossLinkSpherePairs(const RobotModel& model);

/// |c_i - c_j|^2 - (rho_i + rho_j)^2 per cross-link pair.
VectorXd selfCollisionConstraints(const RobotModel& model, const Kinematics& kin);

/// (p - c)^T N (p - c) - rho^2 with N = 1 - a a^T: squared distance from a
/// sphere center c to the line through p along unit a, minus rho^2.
double lineSphereClearance(const Vector3d& p, const Vector3d& a, const Vector3d& c, double rho);

/// Unit directions of the cone lines around the exhaust direction -axis.
std::vector<Vector3d> coneLines(const Vector3d& thrustAxis, const ConeGeometry& cone);

/// One entry per (healthy thruster, cone line, lower-body sphere).
VectorXd jetCollisionConstraints(const RobotModel& model, const Kinematics& kin, const ConeGeometry& cone,
                                 const std::vector<bool>& faulty);

struct RefGenConfig {
  int maxOuterIterations = 60;
  int maxInnerIterations = 300;
  double innerTolerance = 1e-9;
  double equilibriumTolerance = 1e-6;  // on |Ldot|^2, N^2
  double collisionTolerance = 1e-9;
  double collisionMargin = 1e-7;
  double initialPenalty = 10.0;
  double finiteDifferenceStep = 1e-6;
};

struct ReferenceReport {
  double objective = 0.0;
  double equilibrium = 0.0;  // |Ldot|^2
  double minSelfCollision = 0.0;
  double minJetCollision = 0.0;
  double boundViolation = 0.0;
  double manipulability = 0.0;
  int outerIterations = 0;
  int innerIterations = 0;
  bool converged = false;
};

struct ReferenceSolution {
  VectorXd x;
  ReferenceReport report;
};

/// Augmented Lagrangian on Ldot = 0 and h >= margin, with a box-projected
/// BFGS inner solver on central finite-difference gradients. Deterministic.
ReferenceSolution solveReferenceProblem(const RobotModel& model, const ReferenceProblem& problem,
                                        const RefGenConfig& config = {});

ReferenceReport evaluateReference(const RobotModel& model, const ReferenceProblem& problem, const VectorXd& x);

ReferenceSet toReferenceSet(const RobotModel& model, const VectorXd& x);

// Files.
ReferenceProblem problemFromJson(const nlohmann::json& j, const RobotModel& model);
ReferenceProblem loadProblem(const std::string& path, const RobotModel& model);
nlohmann::json referenceSetToJson(const RobotModel& model, const ReferenceSet& refs);
ReferenceSet referenceSetFromJson(const nlohmann::json& j, const RobotModel& model);
nlohmann::json reportToJson(const ReferenceReport& report);

}  // namespace jetfault
