#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "energyecon/cost.hpp"
#include "energyecon/numerics.hpp"

namespace {

using namespace energyecon;
using namespace energyecon::numerics;

NlpProblem quadratic_1d(double center) {
  NlpProblem p;
  p.dimension = 1;
  p.objective = [center](const Vector& x) { return (x(0) - center) * (x(0) - center); };
  p.gradient = [center](const Vector& x) { return Vector::Constant(1, 2.0 * (x(0) - center)); };
  p.hessian = [](const Vector&) { return Matrix::Constant(1, 1, 2.0); };
  return p;
}

TEST(KktSolve, InteriorOptimumHasZeroBoundMultiplier) {
  NlpProblem p = quadratic_1d(3.0);
  p.lower = Vector::Zero(1);
  KktResult r = kkt_solve(p, Vector::Constant(1, 1.0));
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_NEAR(r.x(0), 3.0, 1e-8);
  EXPECT_NEAR(r.bound_multipliers(0), 0.0, 1e-8);
}

TEST(KktSolve, UpperBoundBindsWithMultiplierFour) {
  NlpProblem p = quadratic_1d(3.0);
  p.constraints.push_back(linear_constraint(Vector::Constant(1, 1.0), 1.0));
  KktResult r = kkt_solve(p, Vector::Constant(1, 0.0));
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_NEAR(r.x(0), 1.0, 1e-8);
  EXPECT_NEAR(r.multipliers(0), 4.0, 1e-7);
}

TEST(KktSolve, EqualityMultiplierFollowsSignConvention) {
  NlpProblem p;
  p.dimension = 2;
  p.objective = [](const Vector& x) { return x.squaredNorm(); };
  p.gradient = [](const Vector& x) -> Vector { return 2.0 * x; };
  p.hessian = [](const Vector&) -> Matrix { return 2.0 * Matrix::Identity(2, 2); };
  p.constraints.push_back(linear_constraint(Vector::Ones(2), 2.0, Constraint::Kind::kEquality));
  KktResult r = kkt_solve(p, Vector::Zero(2));
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_NEAR(r.x(0), 1.0, 1e-8);
  EXPECT_NEAR(r.x(1), 1.0, 1e-8);
  EXPECT_NEAR(r.multipliers(0), -2.0, 1e-7);
  EXPECT_LT(r.residuals.max(), 1e-8);
}

// min (x0 - 1)^2 + (x1 + 1)^2 over x >= 0: x1 sits on its bound with
// multiplier 2 and nothing of the barrier is left in the answer.
TEST(KktSolve, ActiveBoundsAreExact) {
  NlpProblem p;
  p.dimension = 2;
  p.objective = [](const Vector& x) { return (x(0) - 1.0) * (x(0) - 1.0) + (x(1) + 1.0) * (x(1) + 1.0); };
  p.gradient = [](const Vector& x) { return Vector{{2.0 * (x(0) - 1.0), 2.0 * (x(1) + 1.0)}}; };
  p.hessian = [](const Vector&) -> Matrix { return 2.0 * Matrix::Identity(2, 2); };
  p.lower = Vector::Zero(2);
  KktResult r = kkt_solve(p, Vector::Constant(2, 0.5));
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_EQ(r.x(1), 0.0);
  EXPECT_EQ(r.bound_multipliers(0), 0.0);
  EXPECT_NEAR(r.bound_multipliers(1), 2.0, 1e-14);
  EXPECT_NEAR(r.x(0), 1.0, 1e-15);
  EXPECT_EQ(r.residuals.complementarity, 0.0);
}

TEST(KktSolve, ScaledSolveMatchesPlainSolve) {
  NlpProblem p;
  p.dimension = 2;
  p.objective = [](const Vector& x) { return 1e4 * x(0) + x(1); };
  p.gradient = [](const Vector&) { return Vector{{1e4, 1.0}}; };
  Constraint c;
  c.kind = Constraint::Kind::kLessEqual;
  c.value = [](const Vector& x) { return 1.0 - std::sqrt(x(0) * x(1)); };
  c.gradient = [](const Vector& x) {
    double s = std::sqrt(x(0) * x(1));
    return Vector{{-0.5 * x(1) / s, -0.5 * x(0) / s}};
  };
  c.hessian = [](const Vector& x) {
    double s = std::sqrt(x(0) * x(1));
    Matrix h(2, 2);
    h << 0.25 * x(1) * x(1) / (s * s * s), -0.25 / s, -0.25 / s, 0.25 * x(0) * x(0) / (s * s * s);
    return h;
  };
  p.constraints.push_back(c);
  p.lower = Vector::Zero(2);
  ProblemScaling scale{Vector{{0.01, 100.0}}, 1.0};
  KktResult r = kkt_solve_scaled(p, Vector{{0.02, 200.0}}, scale);
  ASSERT_EQ(r.status, Status::kOk);
  // min 1e4 a + b with ab >= 1: a = 0.01, b = 100, cost 200, multiplier 200.
  EXPECT_NEAR(r.x(0), 0.01, 1e-8);
  EXPECT_NEAR(r.x(1), 100.0, 1e-5);
  EXPECT_NEAR(r.multipliers(0), 200.0, 1e-5);
}

TEST(FixedPoint, AffineContraction) {
  SolverSettings s;
  s.damping = 1.0;
  FixedPointResult r = fixed_point_iterate([](const Vector& x) -> Vector { return x / 2.0 + Vector::Ones(1); },
                                           Vector::Zero(1), s);
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_NEAR(r.point(0), 2.0, 1e-9);
}

TEST(FixedPoint, IdentityReturnsStartInOneIteration) {
  SolverSettings s;
  Vector start = Vector{{1.5, -2.0}};
  FixedPointResult r = fixed_point_iterate([](const Vector& x) { return x; }, start, s);
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.point, start);
}

TEST(FixedPoint, IterationCountWithinGeometricBound) {
  // Contraction rate q = 0.8: ||e_n|| <= q^n ||e_0||, so reaching tol from
  // an initial error of 10 takes at most ceil(ln(tol / 10) / ln q) + 1 steps.
  SolverSettings s;
  s.damping = 1.0;
  s.tolerance = 1e-10;
  FixedPointResult r = fixed_point_iterate([](const Vector& x) -> Vector { return 0.8 * x; },
                                           Vector::Constant(1, 10.0), s);
  ASSERT_EQ(r.status, Status::kOk);
  const int bound = static_cast<int>(std::ceil(std::log(1e-10 / 10.0) / std::log(0.8))) + 1;
  EXPECT_LE(r.iterations, bound);
  EXPECT_LE(r.residual, 1e-10);
}

TEST(FiniteDiff, Polynomial) {
  Vector g = finite_diff_gradient([](const Vector& x) { return x(0) * x(0); }, Vector::Constant(1, 3.0), 1e-4);
  EXPECT_NEAR(g(0), 6.0, 1e-6);
}

TEST(FiniteDiff, ConstantHasZeroGradient) {
  Vector g = finite_diff_gradient([](const Vector&) { return 7.0; }, Vector{{1.0, 2.0}}, 1e-4);
  EXPECT_EQ(g(0), 0.0);
  EXPECT_EQ(g(1), 0.0);
}

TEST(FiniteDiff, Logarithm) {
  EXPECT_NEAR(finite_diff_derivative([](double x) { return std::log(x); }, 2.0, 1e-4), 0.5, 1e-6);
}

TEST(FiniteDiff, LogElasticityExactForPowerLaws) {
  EXPECT_NEAR(log_elasticity([](double x) { return 3.0 * std::pow(x, 0.7); }, 2.0, 1e-3), 0.7, 1e-12);
}

TEST(GridOracle, LogUtilityUnderBudget) {
  GridOracleRequest req;
  req.objective = [](std::span<const double> q) { return std::log(q[0]); };
  req.feasible = [](std::span<const double> q) { return 5.0 * q[0] <= 100.0; };
  req.lower = {0.1};
  req.upper = {30.0};
  req.resolution = 1000;
  GridOracleResult r = grid_oracle(req);
  EXPECT_NEAR(r.point(0), 20.0, 30.0 / 999);
  EXPECT_LE(5.0 * r.point(0), 100.0);
}

TEST(GridOracle, EmptyFeasibleSetThrows) {
  GridOracleRequest req;
  req.objective = [](std::span<const double> q) { return q[0]; };
  req.feasible = [](std::span<const double>) { return false; };
  req.lower = {0.0};
  req.upper = {1.0};
  try {
    grid_oracle(req);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoFeasibleGridPoint);
  }
}

TEST(GridOracle, ResultIndependentOfWorkerCount) {
  GridOracleRequest req;
  req.objective = [](std::span<const double> q) { return -std::abs(q[0] - 0.5) - std::abs(q[1] - 0.25); };
  req.lower = {0.0, 0.0};
  req.upper = {1.0, 1.0};
  req.resolution = 101;
  req.workers = 1;
  GridOracleResult one = grid_oracle(req);
  req.workers = 4;
  GridOracleResult four = grid_oracle(req);
  EXPECT_EQ(one.point, four.point);
  EXPECT_EQ(one.value, four.value);
}

// Two-input cost minimum: the grid over the free input (the other pinned by
// the output requirement) agrees with the closed form within grid spacing.
TEST(GridOracle, TwoInputProducerMatchesClosedForm) {
  ProductionTech tech{"bread", TechForm::kCobbDouglas, 1.0, {0.4, 0.3}};
  std::vector<double> prices{10.0, 6.0};
  const double q = 1.7;
  CostMinimum exact = cost_min(tech, prices, q);
  GridOracleRequest req;
  req.sense = Sense::kMinimize;
  req.objective = [&](std::span<const double> z) {
    double x1 = std::pow(q / std::pow(z[0], 0.4), 1.0 / 0.3);
    return prices[0] * z[0] + prices[1] * x1;
  };
  req.feasible = [](std::span<const double> z) { return z[0] > 0.0; };
  req.lower = {0.0};
  req.upper = {3.0 * exact.inputs[0]};
  req.resolution = 200;
  GridOracleResult g = grid_oracle(req);
  EXPECT_NEAR(g.point(0), exact.inputs[0], 3.0 * exact.inputs[0] / 199);
  EXPECT_NEAR(g.value / exact.cost, 1.0, 1e-3);
}

TEST(WorkerCount, ReadsEnvironment) {
  ::unsetenv("ENERGYECON_THREADS");
  const unsigned all = worker_count();
  EXPECT_GE(all, 1u);
  ::setenv("ENERGYECON_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1u);
  ::setenv("ENERGYECON_THREADS", "100000", 1);
  EXPECT_EQ(worker_count(), all);  // a cap, never more than the hardware offers
  ::setenv("ENERGYECON_THREADS", "zero", 1);
  EXPECT_EQ(worker_count(), all);
  ::unsetenv("ENERGYECON_THREADS");
}

TEST(SolverSettings, RejectsNonPositiveTolerance) {
  SolverSettings s;
  EXPECT_TRUE(s.violations().empty());
  s.tolerance = 0.0;
  s.max_iterations = 0;
  EXPECT_EQ(s.violations().size(), 2u);
}

}  // namespace
