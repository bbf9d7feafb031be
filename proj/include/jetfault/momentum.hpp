#pragma once

#include "jetfault/multibody.hpp"

namespace jetfault {

/// Ldot = A(q) T + F_G, with A = [a_1 ... a_np; S(r_1) a_1 ... S(r_np) a_np]
/// and F_G = (0, 0, -m g, 0, 0, 0) in CoM coordinates with inertial axes.
struct ThrustMatrix {
  Matrix6Xd matrix;
  Vector6d gravityWrench = Vector6d::Zero();
  std::vector<Vector3d> axes;        // a_k, world
  std::vector<Vector3d> leverArms;   // r_k = application point - CoM
};

ThrustMatrix thrustMatrix(const RobotModel& model, const Kinematics& kin);
ThrustMatrix thrustMatrix(const RobotModel& model, const Configuration& q);

struct MomentumRate {
  Vector3d linear = Vector3d::Zero();   // ldot, N
  Vector3d angular = Vector3d::Zero();  // wdot, N m (inertial axes)
  Vector6d gravityWrench = Vector6d::Zero();

  Vector6d stacked() const {
    Vector6d v;
    v << linear, angular;
    return v;
  }
};

MomentumRate momentumRate(const RobotModel& model, const Configuration& q, const VectorXd& thrusts);

/// Momentum rate with the angular part in body coordinates: (ldot, R_B^T wdot).
/// This is the quantity whose time derivative the controller shapes.
Vector6d mixedMomentumRate(const RobotModel& model, const Configuration& q, const VectorXd& thrusts);

/// Momentum acceleration (lddot inertial, wddot body) = map * u + drift,
/// u = (Tdot, sdot). `drift` collects the terms driven by the base velocity.
struct MomentumAccelerationMap {
  Matrix6Xd map;
  Vector6d drift = Vector6d::Zero();

  Vector6d apply(const VectorXd& u) const { return map * u + drift; }
};

MomentumAccelerationMap momentumAccelerationMap(const RobotModel& model, const Configuration& q,
                                                const SystemVelocity& nu, const VectorXd& thrusts);

}  // namespace jetfault
