#include "jetfault/qp.hpp"

#include <limits>

namespace jetfault {

double BoxQP::kktResidual(const VectorXd& x) const {
  const VectorXd g = hessian * x + gradient;
  return (x - clamp(x - g)).cwiseAbs().maxCoeff();
}

namespace {

enum class Bound : signed char { Free = 0, Lower = -1, Upper = 1 };

void checkDimensions(const BoxQP& p) {
  const auto d = p.gradient.size();
  if (p.hessian.rows() != d || p.hessian.cols() != d || p.lower.size() != d || p.upper.size() != d)
    throw std::invalid_argument("box QP dimension mismatch");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (p.lower[i] > p.upper[i])
      throw InfeasibleBounds("box QP bound " + std::to_string(i) + " has lower > upper");
  }
}

// Newton direction on the free set: H_FF p_F = -g_F. Falls back to a lightly
// regularized solve when H_FF is only semidefinite.
VectorXd subspaceDirection(const MatrixXd& h, const VectorXd& g, const std::vector<int>& free) {
  const int nf = static_cast<int>(free.size());
  MatrixXd hff(nf, nf);
  VectorXd gf(nf);
  for (int a = 0; a < nf; ++a) {
    gf[a] = g[free[a]];
    for (int b = 0; b < nf; ++b) hff(a, b) = h(free[a], free[b]);
  }
  Eigen::LLT<MatrixXd> llt(hff);
  if (llt.info() == Eigen::Success) return llt.solve(-gf);
  const double shift = 1e-12 * (1.0 + hff.diagonal().cwiseAbs().maxCoeff());
  return MatrixXd(hff + shift * MatrixXd::Identity(nf, nf)).ldlt().solve(-gf);
}

}  // namespace

QpResult solveBoxQP(const BoxQP& problem, const QpOptions& options, const VectorXd* initialGuess) {
  checkDimensions(problem);
  const int d = problem.size();
  const MatrixXd& h = problem.hessian;
  const VectorXd& lb = problem.lower;
  const VectorXd& ub = problem.upper;

  QpResult result;
  VectorXd x = initialGuess ? problem.clamp(*initialGuess) : problem.clamp(VectorXd::Zero(d));
  if (options.recordObjective) result.objectiveHistory.push_back(problem.objective(x));

  std::vector<Bound> state(d, Bound::Free);
  auto classify = [&](const VectorXd& g) {
    // A variable sitting exactly on a bound is held there unless the gradient
    // points strictly inward.
    for (int i = 0; i < d; ++i) {
      if (x[i] <= lb[i] && g[i] >= 0.0) {
        x[i] = lb[i];
        state[i] = Bound::Lower;
      } else if (x[i] >= ub[i] && g[i] <= 0.0) {
        x[i] = ub[i];
        state[i] = Bound::Upper;
      } else {
        state[i] = Bound::Free;
      }
    }
  };

  bool optimal = false;
  while (!optimal) {
    VectorXd g = h * x + problem.gradient;
    result.kktResidual = (x - problem.clamp(x - g)).cwiseAbs().maxCoeff();
    if (result.kktResidual <= options.tolerance) break;
    if (result.iterations >= options.maxIterations) {
      result.status = QpStatus::NonConvergence;
      break;
    }

    // Projected-gradient step with Armijo backtracking along the projection arc.
    {
      const double curvature = g.dot(h * g);
      double t = curvature > 0.0 ? g.squaredNorm() / curvature : 1.0;
      const double f0 = problem.objective(x);
      for (int k = 0; k < 60; ++k) {
        const VectorXd trial = problem.clamp(x - t * g);
        if (problem.objective(trial) <= f0 + 1e-4 * g.dot(trial - x)) {
          x = trial;
          break;
        }
        t *= 0.5;
      }
      ++result.iterations;
      if (options.recordObjective) result.objectiveHistory.push_back(problem.objective(x));
    }

    // Primal active-set refinement with exact subspace Newton steps.
    g = h * x + problem.gradient;
    classify(g);
    while (result.iterations < options.maxIterations) {
      std::vector<int> free;
      for (int i = 0; i < d; ++i)
        if (state[i] == Bound::Free) free.push_back(i);

      bool subspaceOptimal = free.empty();
      if (!free.empty()) {
        const VectorXd p = subspaceDirection(h, g, free);
        double alpha = 1.0;
        int blocking = -1;
        Bound blockingSide = Bound::Free;
        for (std::size_t a = 0; a < free.size(); ++a) {
          const int i = free[a];
          if (p[a] < 0.0 && std::isfinite(lb[i])) {
            const double r = (lb[i] - x[i]) / p[a];
            if (r < alpha) alpha = std::max(r, 0.0), blocking = i, blockingSide = Bound::Lower;
          } else if (p[a] > 0.0 && std::isfinite(ub[i])) {
            const double r = (ub[i] - x[i]) / p[a];
            if (r < alpha) alpha = std::max(r, 0.0), blocking = i, blockingSide = Bound::Upper;
          }
        }
        for (std::size_t a = 0; a < free.size(); ++a) x[free[a]] += alpha * p[a];
        x = problem.clamp(x);
        ++result.iterations;
        if (blocking >= 0) {
          x[blocking] = blockingSide == Bound::Lower ? lb[blocking] : ub[blocking];
          state[blocking] = blockingSide;
        } else {
          subspaceOptimal = true;
        }
        g = h * x + problem.gradient;
        if (options.recordObjective) result.objectiveHistory.push_back(problem.objective(x));
      }
      if (!subspaceOptimal) continue;

      // Release the bound with the most negative multiplier, if any.
      int release = -1;
      double worst = -options.tolerance;
      for (int i = 0; i < d; ++i) {
        const double multiplier = state[i] == Bound::Lower ? g[i] : state[i] == Bound::Upper ? -g[i] : 0.0;
        if (multiplier < worst) worst = multiplier, release = i;
      }
      if (release < 0) {
        // Exact minimizer of the current face with valid multipliers: this is
        // the solution up to roundoff.
        optimal = true;
        break;
      }
      state[release] = Bound::Free;
    }
  }

  result.kktResidual = problem.kktResidual(x);
  result.solution = x;
  return result;
}

BoxQP stackTasks(std::span<const Task> tasks, double regularization) {
  if (tasks.empty()) throw std::invalid_argument("stackTasks: no tasks");
  const auto d = tasks.front().matrix.cols();
  BoxQP qp;
  qp.hessian = regularization * MatrixXd::Identity(d, d);
  qp.gradient = VectorXd::Zero(d);
  for (const Task& t : tasks) {
    if (t.matrix.cols() != d || t.matrix.rows() != t.target.size())
      throw std::invalid_argument("stackTasks: task dimension mismatch");
    qp.hessian.noalias() += t.weight * t.matrix.transpose() * t.matrix;
    qp.gradient.noalias() -= t.weight * t.matrix.transpose() * t.target;
  }
  qp.lower = VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
  qp.upper = VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  return qp;
}

}  // namespace jetfault
