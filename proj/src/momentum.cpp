#include "jetfault/momentum.hpp"

namespace jetfault {

ThrustMatrix thrustMatrix(const RobotModel& model, const Kinematics& kin) {
  const int np = model.numThrusters();
  ThrustMatrix out;
  out.matrix = Matrix6Xd::Zero(6, np);
  out.axes.resize(np);
  out.leverArms.resize(np);
  for (int k = 0; k < np; ++k) {
    const Vector3d& a = kin.thrusters[k].axis;
    const Vector3d r = kin.thrusters[k].point - kin.com;
    out.axes[k] = a;
    out.leverArms[k] = r;
    out.matrix.col(k) << a, r.cross(a);
  }
  out.gravityWrench(2) = -model.totalMass() * model.gravity();
  return out;
}

ThrustMatrix thrustMatrix(const RobotModel& model, const Configuration& q) {
  return thrustMatrix(model, forwardKinematics(model, q));
}

MomentumRate momentumRate(const RobotModel& model, const Configuration& q, const VectorXd& thrusts) {
  const ThrustMatrix tm = thrustMatrix(model, q);
  const Vector6d rate = tm.matrix * thrusts + tm.gravityWrench;
  MomentumRate out;
  out.linear = rate.head<3>();
  out.angular = rate.tail<3>();
  out.gravityWrench = tm.gravityWrench;
  return out;
}

Vector6d mixedMomentumRate(const RobotModel& model, const Configuration& q, const VectorXd& thrusts) {
  const MomentumRate rate = momentumRate(model, q, thrusts);
  Vector6d out;
  out << rate.linear, q.baseRotation.transpose() * rate.angular;
  return out;
}

MomentumAccelerationMap momentumAccelerationMap(const RobotModel& model, const Configuration& q,
                                                const SystemVelocity& nu, const VectorXd& thrusts) {
  const int np = model.numThrusters();
  const int nj = model.numJoints();
  const Kinematics kin = forwardKinematics(model, q);
  const ThrustMatrix tm = thrustMatrix(model, kin);
  const Matrix3d rt = q.baseRotation.transpose();
  const Matrix3Xd jcom = comJacobian(model, kin);

  // Derivative of the mixed momentum rate along an arbitrary velocity
  // direction: d/dt = rateJacobian * nu.
  //   a_k'   = (J_w,host nu) x a_k
  //   r_k'   = (J_k - J_com) nu
  //   (R^T w)' = R^T (w x omega_B + sum_k T_k (r_k' x a_k + r_k x a_k'))
  Matrix6Xd rateJacobian = Matrix6Xd::Zero(6, model.dofs());
  Vector3d angularRate = Vector3d::Zero();
  for (int k = 0; k < np; ++k) {
    const Thruster& t = model.thrusters()[k];
    const Vector3d& a = tm.axes[k];
    const Vector3d& r = tm.leverArms[k];
    const Matrix3Xd axisRate = -skew(a) * angularJacobian(model, kin, t.link);
    const Matrix3Xd leverRate = pointJacobian(model, kin, t.link, kin.thrusters[k].point) - jcom;
    rateJacobian.topRows<3>() += thrusts[k] * axisRate;
    rateJacobian.bottomRows<3>() += thrusts[k] * (-skew(a) * leverRate + skew(r) * axisRate);
    angularRate += thrusts[k] * r.cross(a);
  }
  rateJacobian.bottomRows<3>().middleCols<3>(3) += skew(angularRate);
  rateJacobian.bottomRows<3>() = rt * rateJacobian.bottomRows<3>();

  MomentumAccelerationMap out;
  out.map = Matrix6Xd::Zero(6, np + nj);
  out.map.topLeftCorner(3, np) = tm.matrix.topRows<3>();
  out.map.bottomLeftCorner(3, np) = rt * tm.matrix.bottomRows<3>();
  out.map.rightCols(nj) = rateJacobian.rightCols(nj);

  Vector6d baseVelocity;
  baseVelocity << nu.baseLinear, nu.baseAngular;
  out.drift = rateJacobian.leftCols<6>() * baseVelocity;
  return out;
}

}  // namespace jetfault
