#pragma once

#include <vector>

#include "jetfault/model.hpp"

namespace jetfault {

/// q = (p_B, R_B, s)
struct Configuration {
  Vector3d basePosition = Vector3d::Zero();
  Matrix3d baseRotation = Matrix3d::Identity();
  VectorXd jointPositions;

  static Configuration zero(const RobotModel& model) {
    Configuration q;
    q.jointPositions = VectorXd::Zero(model.numJoints());
    return q;
  }
};

/// nu = (v_B, omega_B, sdot). Base velocities are expressed in the inertial
/// frame, so dR_B/dt = skew(omega_B) R_B.
struct SystemVelocity {
  Vector3d baseLinear = Vector3d::Zero();
  Vector3d baseAngular = Vector3d::Zero();
  VectorXd jointVelocities;

  static SystemVelocity zero(const RobotModel& model) {
    SystemVelocity v;
    v.jointVelocities = VectorXd::Zero(model.numJoints());
    return v;
  }
  VectorXd stacked() const;
  static SystemVelocity fromStacked(const VectorXd& nu);
};

/// Moves q along the velocity nu for time dt: translation by v dt, rotation by
/// exp(skew(omega dt)) on the left, joints by sdot dt.
Configuration integrate(const Configuration& q, const SystemVelocity& nu, double dt);

struct Pose {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d position = Vector3d::Zero();
};

struct ThrusterFrame {
  Vector3d point;  // world application point
  Vector3d axis;   // world thrust direction, unit norm
};

struct Kinematics {
  std::vector<Pose> links;
  std::vector<Vector3d> linkComs;      // world CoM of each link
  std::vector<Vector3d> jointAxes;     // world joint axes
  std::vector<Vector3d> jointOrigins;  // world joint origins
  std::vector<ThrusterFrame> thrusters;
  Vector3d com = Vector3d::Zero();
};

Kinematics forwardKinematics(const RobotModel& model, const Configuration& q);

/// 3x(6+n) Jacobian of a point rigidly attached to `link`, at world position
/// `point`: J nu is the world velocity of the point.
Matrix3Xd pointJacobian(const RobotModel& model, const Kinematics& kin, int link, const Vector3d& point);
/// 3x(6+n) angular-velocity Jacobian of `link`.
Matrix3Xd angularJacobian(const RobotModel& model, const Kinematics& kin, int link);

/// Jacobian J_k of the application point of thruster k. Throws
/// std::out_of_range for a bad index.
Matrix3Xd thrusterJacobian(const RobotModel& model, const Configuration& q, int thrusterIndex);
Matrix3Xd thrusterJacobian(const RobotModel& model, const Kinematics& kin, int thrusterIndex);

/// CoM Jacobian (3x(6+n)).
Matrix3Xd comJacobian(const RobotModel& model, const Kinematics& kin);

/// Terms of M(q) nudot + C(q, nu) nu + G(q) = [0; tau] + sum_k J_k^T F_k.
struct DynamicsTerms {
  MatrixXd massMatrix;
  MatrixXd coriolisMatrix;
  VectorXd gravityVector;
};

DynamicsTerms dynamicsTerms(const RobotModel& model, const Configuration& q, const SystemVelocity& nu);

/// Centroidal momentum (l, w) about the CoM with inertial orientation, and the
/// 6x(6+n) centroidal momentum matrix.
struct CentroidalMomentum {
  Vector6d momentum = Vector6d::Zero();
  Matrix6Xd matrix;
  Vector3d com = Vector3d::Zero();
};

CentroidalMomentum centroidalMomentum(const RobotModel& model, const Configuration& q, const SystemVelocity& nu);

/// Locked inertia about the CoM in base coordinates. Depends on s only.
Matrix3d lockedInertia(const RobotModel& model, const VectorXd& jointPositions);

/// Total kinetic energy 0.5 nu^T M nu.
double kineticEnergy(const RobotModel& model, const Configuration& q, const SystemVelocity& nu);

}  // namespace jetfault
