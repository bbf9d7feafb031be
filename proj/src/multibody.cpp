#include "jetfault/multibody.hpp"

#include <stdexcept>

namespace jetfault {

VectorXd SystemVelocity::stacked() const {
  VectorXd nu(6 + jointVelocities.size());
  nu << baseLinear, baseAngular, jointVelocities;
  return nu;
}

SystemVelocity SystemVelocity::fromStacked(const VectorXd& nu) {
  SystemVelocity v;
  v.baseLinear = nu.head<3>();
  v.baseAngular = nu.segment<3>(3);
  v.jointVelocities = nu.tail(nu.size() - 6);
  return v;
}

Configuration integrate(const Configuration& q, const SystemVelocity& nu, double dt) {
  Configuration out;
  out.basePosition = q.basePosition + dt * nu.baseLinear;
  out.baseRotation = expSO3(dt * nu.baseAngular) * q.baseRotation;
  out.jointPositions = q.jointPositions + dt * nu.jointVelocities;
  return out;
}

Kinematics forwardKinematics(const RobotModel& model, const Configuration& q) {
  const int nl = model.numLinks();
  Kinematics kin;
  kin.links.resize(nl);
  kin.linkComs.resize(nl);
  kin.jointAxes.resize(model.numJoints());
  kin.jointOrigins.resize(model.numJoints());

  for (int link : model.linkOrder()) {
    const int j = model.parentJoint(link);
    Pose& pose = kin.links[link];
    if (j < 0) {
      pose.rotation = q.baseRotation;
      pose.position = q.basePosition;
    } else {
      const Joint& jt = model.joints()[j];
      const Pose& parent = kin.links[jt.parent];
      const Matrix3d mount = parent.rotation * jt.originRotation;
      pose.position = parent.position + parent.rotation * jt.originPosition;
      pose.rotation = mount * axisAngle(jt.axis, q.jointPositions[j]);
      kin.jointAxes[j] = mount * jt.axis;
      kin.jointOrigins[j] = pose.position;
    }
    kin.linkComs[link] = pose.position + pose.rotation * model.links()[link].com;
  }

  Vector3d weighted = Vector3d::Zero();
  for (int i = 0; i < nl; ++i) weighted += model.links()[i].mass * kin.linkComs[i];
  kin.com = weighted / model.totalMass();

  kin.thrusters.reserve(model.numThrusters());
  for (const auto& t : model.thrusters()) {
    const Pose& host = kin.links[t.link];
    kin.thrusters.push_back({host.position + host.rotation * t.position, host.rotation * t.axis});
  }
  return kin;
}

Matrix3Xd pointJacobian(const RobotModel& model, const Kinematics& kin, int link, const Vector3d& point) {
  Matrix3Xd jac = Matrix3Xd::Zero(3, model.dofs());
  jac.leftCols<3>().setIdentity();
  jac.middleCols<3>(3) = -skew(point - kin.links[0].position);
  for (int j : model.supportJoints(link)) jac.col(6 + j) = kin.jointAxes[j].cross(point - kin.jointOrigins[j]);
  return jac;
}

Matrix3Xd angularJacobian(const RobotModel& model, const Kinematics& kin, int link) {
  Matrix3Xd jac = Matrix3Xd::Zero(3, model.dofs());
  jac.middleCols<3>(3).setIdentity();
  for (int j : model.supportJoints(link)) jac.col(6 + j) = kin.jointAxes[j];
  return jac;
}

Matrix3Xd thrusterJacobian(const RobotModel& model, const Kinematics& kin, int thrusterIndex) {
  if (thrusterIndex < 0 || thrusterIndex >= model.numThrusters())
    throw std::out_of_range("thruster index " + std::to_string(thrusterIndex) + " out of range");
  return pointJacobian(model, kin, model.thrusters()[thrusterIndex].link, kin.thrusters[thrusterIndex].point);
}

Matrix3Xd thrusterJacobian(const RobotModel& model, const Configuration& q, int thrusterIndex) {
  if (thrusterIndex < 0 || thrusterIndex >= model.numThrusters())
    throw std::out_of_range("thruster index " + std::to_string(thrusterIndex) + " out of range");
  return thrusterJacobian(model, forwardKinematics(model, q), thrusterIndex);
}

Matrix3Xd comJacobian(const RobotModel& model, const Kinematics& kin) {
  Matrix3Xd jac = Matrix3Xd::Zero(3, model.dofs());
  for (int i = 0; i < model.numLinks(); ++i)
    jac += model.links()[i].mass * pointJacobian(model, kin, i, kin.linkComs[i]);
  return jac / model.totalMass();
}

namespace {

struct LinkVelocities {
  std::vector<Vector3d> angular;  // world angular velocity of each link
  std::vector<Vector3d> origin;   // world velocity of each link frame origin
};

LinkVelocities linkVelocities(const RobotModel& model, const Kinematics& kin, const SystemVelocity& nu) {
  LinkVelocities out;
  out.angular.resize(model.numLinks());
  out.origin.resize(model.numLinks());
  for (int link : model.linkOrder()) {
    const int j = model.parentJoint(link);
    if (j < 0) {
      out.angular[link] = nu.baseAngular;
      out.origin[link] = nu.baseLinear;
      continue;
    }
    const int parent = model.joints()[j].parent;
    out.origin[link] = out.origin[parent] +
                       out.angular[parent].cross(kin.links[link].position - kin.links[parent].position);
    out.angular[link] = out.angular[parent] + kin.jointAxes[j] * nu.jointVelocities[j];
  }
  return out;
}

// Time derivatives of the point and angular Jacobians of `link` along nu,
// for a point rigidly attached to the link.
void jacobianRates(const RobotModel& model, const Kinematics& kin, const LinkVelocities& vel, int link,
                   const Vector3d& point, const Vector3d& pointVelocity, Matrix3Xd& linearRate,
                   Matrix3Xd& angularRate) {
  linearRate.setZero(3, model.dofs());
  angularRate.setZero(3, model.dofs());
  linearRate.middleCols<3>(3) = -skew(pointVelocity - vel.origin[0]);
  for (int j : model.supportJoints(link)) {
    const Joint& jt = model.joints()[j];
    const Vector3d axisRate = vel.angular[jt.parent].cross(kin.jointAxes[j]);
    linearRate.col(6 + j) =
        axisRate.cross(point - kin.jointOrigins[j]) + kin.jointAxes[j].cross(pointVelocity - vel.origin[jt.child]);
    angularRate.col(6 + j) = axisRate;
  }
}

}  // namespace

DynamicsTerms dynamicsTerms(const RobotModel& model, const Configuration& q, const SystemVelocity& nu) {
  const int dofs = model.dofs();
  const Kinematics kin = forwardKinematics(model, q);
  const LinkVelocities vel = linkVelocities(model, kin, nu);
  const Vector3d gravityUp(0.0, 0.0, model.gravity());

  DynamicsTerms out;
  out.massMatrix = MatrixXd::Zero(dofs, dofs);
  out.coriolisMatrix = MatrixXd::Zero(dofs, dofs);
  out.gravityVector = VectorXd::Zero(dofs);

  Matrix3Xd linearRate, angularRate;
  for (int i = 0; i < model.numLinks(); ++i) {
    const Link& link = model.links()[i];
    const Pose& pose = kin.links[i];
    const Matrix3d inertia = pose.rotation * link.inertia * pose.rotation.transpose();
    const Vector3d& com = kin.linkComs[i];
    const Vector3d comVelocity = vel.origin[i] + vel.angular[i].cross(com - pose.position);

    const Matrix3Xd jv = pointJacobian(model, kin, i, com);
    const Matrix3Xd jw = angularJacobian(model, kin, i);
    jacobianRates(model, kin, vel, i, com, comVelocity, linearRate, angularRate);

    const Matrix3Xd inertiaJw = inertia * jw;
    out.massMatrix.noalias() += link.mass * jv.transpose() * jv + jw.transpose() * inertiaJw;
    out.coriolisMatrix.noalias() +=
        link.mass * jv.transpose() * linearRate +
        jw.transpose() * (inertia * angularRate + skew(vel.angular[i]) * inertiaJw);
    out.gravityVector.noalias() += link.mass * jv.transpose() * gravityUp;
  }
  return out;
}

CentroidalMomentum centroidalMomentum(const RobotModel& model, const Configuration& q, const SystemVelocity& nu) {
  const Kinematics kin = forwardKinematics(model, q);
  CentroidalMomentum out;
  out.com = kin.com;
  out.matrix = Matrix6Xd::Zero(6, model.dofs());
  for (int i = 0; i < model.numLinks(); ++i) {
    const Link& link = model.links()[i];
    const Pose& pose = kin.links[i];
    const Matrix3d inertia = pose.rotation * link.inertia * pose.rotation.transpose();
    const Matrix3Xd jv = pointJacobian(model, kin, i, kin.linkComs[i]);
    out.matrix.topRows<3>() += link.mass * jv;
    out.matrix.bottomRows<3>() +=
        link.mass * skew(kin.linkComs[i] - kin.com) * jv + inertia * angularJacobian(model, kin, i);
  }
  out.momentum = out.matrix * nu.stacked();
  return out;
}

Matrix3d lockedInertia(const RobotModel& model, const VectorXd& jointPositions) {
  Configuration q;
  q.jointPositions = jointPositions;
  const Kinematics kin = forwardKinematics(model, q);
  Matrix3d total = Matrix3d::Zero();
  for (int i = 0; i < model.numLinks(); ++i) {
    const Link& link = model.links()[i];
    const Matrix3d& r = kin.links[i].rotation;
    const Matrix3d s = skew(kin.linkComs[i] - kin.com);
    total += r * link.inertia * r.transpose() - link.mass * s * s;
  }
  return 0.5 * (total + total.transpose());
}

double kineticEnergy(const RobotModel& model, const Configuration& q, const SystemVelocity& nu) {
  const VectorXd v = nu.stacked();
  return 0.5 * v.dot(dynamicsTerms(model, q, nu).massMatrix * v);
}

}  // namespace jetfault
