#include "jetfault/audit.hpp"

#include <algorithm>
#include <random>

namespace jetfault {

namespace {

// Link twists in link coordinates by the parent-to-child recursion.
void linkTwists(const RobotModel& model, const Configuration& q, const SystemVelocity& nu,
                std::vector<Vector3d>& angular, std::vector<Vector3d>& linear) {
  angular.assign(model.numLinks(), Vector3d::Zero());
  linear.assign(model.numLinks(), Vector3d::Zero());
  for (int link : model.linkOrder()) {
    const int j = model.parentJoint(link);
    if (j < 0) {
      angular[link] = q.baseRotation.transpose() * nu.baseAngular;
      linear[link] = q.baseRotation.transpose() * nu.baseLinear;
      continue;
    }
    const Joint& jt = model.joints()[j];
    const Matrix3d rpc = jt.originRotation * Eigen::AngleAxisd(q.jointPositions[j], jt.axis).toRotationMatrix();
    angular[link] = rpc.transpose() * angular[jt.parent] + jt.axis * nu.jointVelocities[j];
    linear[link] = rpc.transpose() * (linear[jt.parent] + angular[jt.parent].cross(jt.originPosition));
  }
}

}  // namespace

DynamicsAudit auditDynamics(const RobotModel& model, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DynamicsAudit a;
  a.samples = samples;
  a.minMassEigenvalue = std::numeric_limits<double>::infinity();
  const double h = 1e-6;

  for (int trial = 0; trial < samples; ++trial) {
    Configuration q = Configuration::zero(model);
    q.basePosition = Vector3d(gauss(rng), gauss(rng), gauss(rng));
    q.baseRotation = Eigen::Quaterniond(gauss(rng), gauss(rng), gauss(rng), gauss(rng)).normalized().toRotationMatrix();
    for (int j = 0; j < model.numJoints(); ++j) {
      const Joint& jt = model.joints()[j];
      q.jointPositions[j] = jt.lowerLimit + unit(rng) * (jt.upperLimit - jt.lowerLimit);
    }
    VectorXd v(model.dofs());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const SystemVelocity nu = SystemVelocity::fromStacked(v);

    const DynamicsTerms dyn = dynamicsTerms(model, q, nu);
    const MatrixXd& m = dyn.massMatrix;
    a.massAsymmetry = std::max(a.massAsymmetry, (m - m.transpose()).cwiseAbs().maxCoeff());
    a.minMassEigenvalue =
        std::min(a.minMassEigenvalue, Eigen::SelfAdjointEigenSolver<MatrixXd>(m).eigenvalues().minCoeff());

    const Configuration qp = integrate(q, nu, h);
    const Configuration qm = integrate(q, nu, -h);
    const MatrixXd mdot =
        (dynamicsTerms(model, qp, nu).massMatrix - dynamicsTerms(model, qm, nu).massMatrix) / (2.0 * h);
    const MatrixXd n = mdot - 2.0 * dyn.coriolisMatrix;
    a.skewResidual = std::max(a.skewResidual, (n + n.transpose()).norm());

    const Kinematics kin = forwardKinematics(model, q);
    const Kinematics plus = forwardKinematics(model, qp);
    const Kinematics minus = forwardKinematics(model, qm);
    for (int k = 0; k < model.numThrusters(); ++k) {
      const Vector3d fd = (plus.thrusters[k].point - minus.thrusters[k].point) / (2.0 * h);
      a.jacobianError = std::max(a.jacobianError, (thrusterJacobian(model, kin, k) * v - fd).cwiseAbs().maxCoeff());
    }

    std::vector<Vector3d> angular, linear;
    linkTwists(model, q, nu, angular, linear);
    Vector6d sum = Vector6d::Zero();
    for (int i = 0; i < model.numLinks(); ++i) {
      const Link& l = model.links()[i];
      const Matrix3d& r = kin.links[i].rotation;
      const Vector3d vcom = r * (linear[i] + angular[i].cross(l.com));
      sum.head<3>() += l.mass * vcom;
      sum.tail<3>() += (kin.linkComs[i] - kin.com).cross(l.mass * vcom) + r * l.inertia * angular[i];
    }
    const Vector6d h6 = centroidalMomentum(model, q, nu).matrix * v;
    if (sum.norm() > 0.0) a.momentumRelativeError = std::max(a.momentumRelativeError, (h6 - sum).norm() / sum.norm());
  }
  return a;
}

}  // namespace jetfault
