#include <gtest/gtest.h>

#include <array>

#include "jetfault/momentum.hpp"
#include "qp_oracle.hpp"
#include "test_support.hpp"

namespace jetfault {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(BoxQP, IdentityWithZeroGradientIsZero) {
  BoxQP qp{MatrixXd::Identity(3, 3), VectorXd::Zero(3), VectorXd::Constant(3, -1.0), VectorXd::Constant(3, 1.0)};
  const QpResult r = solveBoxQP(qp);
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.solution.norm(), 0.0);
}

TEST(BoxQP, UnconstrainedMatchesLinearSolve) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    BoxQP qp = testing::randomBoxQP(rng, 6);
    qp.lower.setConstant(-kInf);
    qp.upper.setConstant(kInf);
    const QpResult r = solveBoxQP(qp);
    ASSERT_TRUE(r.converged());
    const VectorXd expected = qp.hessian.ldlt().solve(-qp.gradient);
    EXPECT_LT((r.solution - expected).norm(), 1e-10 * (1.0 + expected.norm()));
  }
}

TEST(BoxQP, MatchesBruteForceActiveSetEnumeration) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + trial % 7;
    const BoxQP qp = testing::randomBoxQP(rng, d);
    const QpResult r = solveBoxQP(qp);
    ASSERT_TRUE(r.converged());
    const VectorXd oracle = testing::bruteForceBoxQP(qp);
    EXPECT_NEAR(qp.objective(r.solution), qp.objective(oracle), 1e-8 * (1.0 + std::abs(qp.objective(oracle))));
    EXPECT_LE(r.kktResidual, 1e-8);
    EXPECT_LE((r.solution - qp.clamp(r.solution)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BoxQP, InfeasibleBoundsThrow) {
  BoxQP qp{MatrixXd::Identity(2, 2), VectorXd::Zero(2), Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(1.0, 0.5)};
  EXPECT_THROW(solveBoxQP(qp), InfeasibleBounds);
}

TEST(BoxQP, DimensionMismatchThrows) {
  BoxQP qp{MatrixXd::Identity(2, 2), VectorXd::Zero(3), VectorXd::Zero(3), VectorXd::Ones(3)};
  EXPECT_THROW(solveBoxQP(qp), std::invalid_argument);
}

TEST(BoxQP, IterationLimitReturnsFeasibleBestIterate) {
  std::mt19937 rng(3);
  const BoxQP qp = testing::randomBoxQP(rng, 8);
  QpOptions options;
  options.maxIterations = 1;
  const QpResult r = solveBoxQP(qp, options);
  if (r.status == QpStatus::NonConvergence) {
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.solution, qp.clamp(r.solution));
    EXPECT_LE(qp.objective(r.solution), qp.objective(qp.clamp(VectorXd::Zero(8))));
  }
  options.maxIterations = 0;
  const QpResult none = solveBoxQP(qp, options);
  EXPECT_EQ(none.status, QpStatus::NonConvergence);
  EXPECT_EQ(none.solution, qp.clamp(VectorXd::Zero(8)));
}

TEST(BoxQP, ObjectiveDecreasesMonotonically) {
  std::mt19937 rng(4);
  QpOptions options;
  options.recordObjective = true;
  for (int trial = 0; trial < 30; ++trial) {
    const BoxQP qp = testing::randomBoxQP(rng, 10);
    const QpResult r = solveBoxQP(qp, options);
    for (std::size_t i = 1; i < r.objectiveHistory.size(); ++i)
      EXPECT_LE(r.objectiveHistory[i], r.objectiveHistory[i - 1] + 1e-12 * (1.0 + std::abs(r.objectiveHistory[i - 1])));
  }
}

TEST(BoxQP, ComplementarySlackness) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const BoxQP qp = testing::randomBoxQP(rng, 9);
    const QpResult r = solveBoxQP(qp);
    const VectorXd g = qp.hessian * r.solution + qp.gradient;
    for (int i = 0; i < 9; ++i) {
      const bool atBound = r.solution[i] == qp.lower[i] || r.solution[i] == qp.upper[i];
      if (!atBound) EXPECT_LE(std::abs(g[i]), 1e-9);
      if (r.solution[i] == qp.lower[i] && qp.lower[i] < qp.upper[i]) EXPECT_GE(g[i], -1e-9);
      if (r.solution[i] == qp.upper[i] && qp.lower[i] < qp.upper[i]) EXPECT_LE(g[i], 1e-9);
    }
  }
}

TEST(BoxQP, ObjectiveScalingLeavesArgminUnchanged) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    BoxQP qp = testing::randomBoxQP(rng, 7);
    const VectorXd x = solveBoxQP(qp).solution;
    for (double c : {1e-3, 0.5, 17.0, 1e4}) {
      BoxQP scaled = qp;
      scaled.hessian *= c;
      scaled.gradient *= c;
      EXPECT_LT((solveBoxQP(scaled).solution - x).norm(), 1e-9 * (1.0 + x.norm()));
    }
  }
}

TEST(BoxQP, Deterministic) {
  std::mt19937 rng(7);
  const BoxQP qp = testing::randomBoxQP(rng, 10);
  const QpResult a = solveBoxQP(qp);
  const QpResult b = solveBoxQP(qp);
  EXPECT_EQ(a.solution, b.solution);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(StackTasks, SingleIdentityTaskReturnsTarget) {
  const std::array tasks{Task{MatrixXd::Identity(4, 4), Eigen::Vector4d(1.0, -2.0, 3.0, 0.5), 1.0}};
  const QpResult r = solveBoxQP(stackTasks(tasks));
  EXPECT_LT((r.solution - tasks[0].target).norm(), 1e-7);
}

TEST(StackTasks, ConflictingScalarTasksGiveWeightedMean) {
  const double w1 = 3.0, w2 = 0.5, t1 = 2.0, t2 = -4.0;
  const std::array tasks{Task{MatrixXd::Ones(1, 1), VectorXd::Constant(1, t1), w1},
                         Task{MatrixXd::Ones(1, 1), VectorXd::Constant(1, t2), w2}};
  const QpResult r = solveBoxQP(stackTasks(tasks, 0.0));
  EXPECT_NEAR(r.solution[0], (w1 * t1 + w2 * t2) / (w1 + w2), 1e-14);
}

TEST(StackTasks, DimensionMismatchThrows) {
  const std::array tasks{Task{MatrixXd::Ones(2, 3), VectorXd::Ones(2), 1.0},
                         Task{MatrixXd::Ones(2, 4), VectorXd::Ones(2), 1.0}};
  EXPECT_THROW(stackTasks(tasks), std::invalid_argument);
  const std::array bad{Task{MatrixXd::Ones(2, 3), VectorXd::Ones(3), 1.0}};
  EXPECT_THROW(stackTasks(bad), std::invalid_argument);
}

// 6 momentum rows + n postural rows on the jetbot, against one-shot normal
// equations of the stacked weighted least squares.
TEST(StackTasks, MomentumAndPosturalStackMatchesNormalEquations) {
  const RobotModel& model = testing::jetbot();
  testing::StateSampler sampler(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Configuration q = sampler.configuration(model);
    const auto map = momentumAccelerationMap(model, q, sampler.velocity(model, 0.2), sampler.thrusts(model));
    Matrix6Xd target = Matrix6Xd::Zero(6, 1);
    for (int i = 0; i < 6; ++i) target(i, 0) = sampler.normal(5.0);
    MatrixXd posture = MatrixXd::Zero(4, 8);
    posture.rightCols(4).setIdentity();
    const VectorXd sdotStar = Eigen::Vector4d(sampler.normal(), sampler.normal(), sampler.normal(), sampler.normal());
    const std::array tasks{Task{map.map.topRows<3>(), target.col(0).head<3>() - map.drift.head<3>(), 1.0},
                           Task{map.map.bottomRows<3>(), target.col(0).tail<3>() - map.drift.tail<3>(), 2.0},
                           Task{posture, sdotStar, 0.1}};
    const QpResult r = solveBoxQP(stackTasks(tasks));

    MatrixXd a(10, 8);
    VectorXd b(10);
    VectorXd w(10);
    a << map.map, posture;
    b << target.col(0) - map.drift, sdotStar;
    w << 1, 1, 1, 2, 2, 2, 0.1, 0.1, 0.1, 0.1;
    const MatrixXd normal = a.transpose() * w.asDiagonal() * a + kTaskRegularization * MatrixXd::Identity(8, 8);
    const VectorXd expected = normal.ldlt().solve(a.transpose() * w.asDiagonal() * b);
    EXPECT_LT((r.solution - expected).norm(), 1e-8 * (1.0 + expected.norm()));
  }
}

TEST(StackTasks, SolutionResidualNotWorseThanRandomFeasiblePoints) {
  std::mt19937 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixXd j1(3, 5), j2(5, 5);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 5; ++c) j1(r, c) = normal(rng);
    j2.setIdentity();
    const std::array tasks{Task{j1, VectorXd::NullaryExpr(3, [&] { return 4.0 * normal(rng); }), 5.0},
                           Task{j2, VectorXd::NullaryExpr(5, [&] { return normal(rng); }), 0.2}};
    BoxQP qp = stackTasks(tasks);
    qp.lower = VectorXd::Constant(5, -0.7);
    qp.upper = VectorXd::Constant(5, 0.9);
    const VectorXd x = solveBoxQP(qp).solution;
    auto cost = [&](const VectorXd& u) {
      double c = 0.0;
      for (const Task& t : tasks) c += 0.5 * t.weight * (t.matrix * u - t.target).squaredNorm();
      return c;
    };
    for (int s = 0; s < 200; ++s) {
      const VectorXd u = VectorXd::NullaryExpr(5, [&] { return -0.7 + 1.6 * unit(rng); });
      EXPECT_LE(cost(x), cost(u) + 1e-9);
    }
  }
}

}  // namespace
}  // namespace jetfault
