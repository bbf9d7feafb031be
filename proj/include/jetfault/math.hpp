#pragma once

#include <Eigen/Dense>

namespace jetfault {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Matrix3Xd = Eigen::Matrix<double, 3, Eigen::Dynamic>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

inline Matrix3d skew(const Vector3d& v) {
  Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

/// Inverse of skew(): extracts the vector from the skew-symmetric part of m.
inline Vector3d vee(const Matrix3d& m) {
  return Vector3d(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

/// Rotation about a unit axis (Rodrigues).
inline Matrix3d axisAngle(const Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

/// SO(3) exponential of a rotation vector.
inline Matrix3d expSO3(const Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

/// Closest rotation in the Frobenius sense.
inline Matrix3d orthonormalize(const Matrix3d& r) {
  Eigen::JacobiSVD<Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    out = u * svd.matrixV().transpose();
  }
  return out;
}

// Z-Y-X convention: R = Rz(yaw) * Ry(pitch) * Rx(roll), rpy = (roll, pitch, yaw).
inline Matrix3d rpyToRotation(const Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vector3d::UnitX()))
      .toRotationMatrix();
}

inline Vector3d rotationToRpy(const Matrix3d& r) {
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

inline bool isRotation(const Matrix3d& r, double tol = 1e-9) {
  return (r.transpose() * r - Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// Rotation error used by the attitude law: 0.5 (Rd^T R - R^T Rd)^vee.
inline Vector3d attitudeError(const Matrix3d& r, const Matrix3d& rd) {
  return 0.5 * vee(rd.transpose() * r - r.transpose() * rd);
}

inline double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

}  // namespace jetfault
