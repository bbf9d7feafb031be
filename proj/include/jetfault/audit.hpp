#pragma once

#include <cstdint>

#include "jetfault/multibody.hpp"

namespace jetfault {

/// Worst cases of the multibody invariants over random states. Each check
/// uses an independent construction (finite differences, per-link sums).
struct DynamicsAudit {
  int samples = 0;
  double minMassEigenvalue = 0.0;    // smallest eigenvalue of M seen
  double massAsymmetry = 0.0;        // max |M - M^T|
  double skewResidual = 0.0;         // ||N + N^T||_F, N = Mdot - 2C
  double jacobianError = 0.0;        // max |J_k nu - FD of the thruster point|
  double momentumRelativeError = 0.0;  // |J_G nu - per-link sum| / |per-link sum|

  bool pass(double skewTol = 1e-6, double jacobianTol = 1e-5, double momentumTol = 1e-9) const {
    return minMassEigenvalue > 0.0 && massAsymmetry <= 1e-9 && skewResidual <= skewTol &&
           jacobianError <= jacobianTol && momentumRelativeError <= momentumTol;
  }
};

DynamicsAudit auditDynamics(const RobotModel& model, int samples, std::uint64_t seed = 1);

}  // namespace jetfault
