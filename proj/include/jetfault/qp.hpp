#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "jetfault/math.hpp"

namespace jetfault {

/// minimize 0.5 x^T H x + f^T x  subject to  lower <= x <= upper.
/// Bounds may be +-infinity.
struct BoxQP {
  MatrixXd hessian;
  VectorXd gradient;
  VectorXd lower;
  VectorXd upper;

  int size() const { return static_cast<int>(gradient.size()); }
  double objective(const VectorXd& x) const { return 0.5 * x.dot(hessian * x) + gradient.dot(x); }
  /// Infinity-norm of x - clamp(x - (H x + f)); zero exactly at a KKT point.
  double kktResidual(const VectorXd& x) const;
  VectorXd clamp(const VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

class InfeasibleBounds : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class QpStatus { Solved, NonConvergence };

struct QpOptions {
  double tolerance = 1e-10;
  int maxIterations = 500;
  bool recordObjective = false;
};

struct QpResult {
  QpStatus status = QpStatus::Solved;
  VectorXd solution;  // best iterate when status is NonConvergence
  double kktResidual = 0.0;
  int iterations = 0;
  std::vector<double> objectiveHistory;  // filled when QpOptions::recordObjective

  bool converged() const { return status == QpStatus::Solved; }
};

/// Projected-gradient steps to identify the active set, followed by exact
/// Newton steps on the free subspace with primal active-set corrections.
/// Throws InfeasibleBounds when lower > upper anywhere, std::invalid_argument
/// on dimension mismatch.
QpResult solveBoxQP(const BoxQP& problem, const QpOptions& options = {}, const VectorXd* initialGuess = nullptr);

/// One least-squares task 0.5 weight |matrix x - target|^2.
struct Task {
  MatrixXd matrix;
  VectorXd target;
  double weight = 1.0;
};

inline constexpr double kTaskRegularization = 1e-8;

/// H = sum J^T W J + eps I, f = -sum J^T W b; bounds left at +-infinity.
BoxQP stackTasks(std::span<const Task> tasks, double regularization = kTaskRegularization);

}  // namespace jetfault
