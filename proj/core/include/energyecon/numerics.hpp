#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "energyecon/errors.hpp"

namespace energyecon::numerics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SolverSettings {
  double tolerance = 1e-10;     // residual norm
  double damping = 0.5;         // fixed-point relaxation, in (0, 1]
  int max_iterations = 10'000;
  int grid_resolution = 200;    // points per axis for grid oracles
  double fd_step = 1e-3;        // relative finite-difference step

  // Empty when the settings are usable.
  std::vector<std::string> violations() const;
};

// ---------------------------------------------------------------------------
// kkt_solve
//
// Minimizes f(x) subject to h_j(x) = 0, g_i(x) <= 0 and x >= lower (per
// component, -inf for free variables). Multiplier convention, fixed for the
// whole library:
//
//   L(x, y, z, zb) = f(x) + sum_j y_j h_j(x) + sum_i z_i g_i(x)
//                         - sum_k zb_k (x_k - lower_k)
//
// so inequality and bound multipliers are >= 0 and equality multipliers are
// free. The method is a primal-dual interior point with slacks on g, strict
// interiority on the bounds and a residual-norm backtracking line search.
// It is intended for the small smooth convex programs built by the solver
// modules, not as a general NLP code.
// ---------------------------------------------------------------------------

struct Constraint {
  enum class Kind { kEquality, kLessEqual };

  Kind kind = Kind::kLessEqual;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  // Empty for affine constraints.
  std::function<Matrix(const Vector&)> hessian;
};

// a'x <= b (or == b).
Constraint linear_constraint(Vector a, double b,
                             Constraint::Kind kind = Constraint::Kind::kLessEqual);

struct NlpProblem {
  Eigen::Index dimension = 0;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  // Empty for linear objectives.
  std::function<Matrix(const Vector&)> hessian;
  std::vector<Constraint> constraints;
  // Size `dimension`, or empty for an unbounded problem.
  Vector lower;
};

struct KktResiduals {
  double stationarity = kInf;
  double primal = kInf;
  double dual = kInf;
  double complementarity = kInf;

  double max() const;
};

struct KktOptions {
  double tolerance = 1e-10;
  int max_iterations = 300;
  // When the iteration stalls or runs out above `tolerance`, the best
  // iterate still counts as converged if its residual is below this.
  double acceptable = 0.0;
};

struct KktResult {
  Vector x;
  // One entry per constraint, aligned with NlpProblem::constraints.
  Vector multipliers;
  // One entry per variable; zero for unbounded variables.
  Vector bound_multipliers;
  double objective = 0.0;
  KktResiduals residuals;
  int iterations = 0;
  Status status = Status::kNoConvergence;
};

// Throws Error(kNonFiniteEvaluation) if the problem cannot be evaluated at
// the (projected) start point. Returns the best iterate with
// Status::kNoConvergence when the iteration budget runs out.
KktResult kkt_solve(const NlpProblem& problem, const Vector& start,
                    const KktOptions& options = {});

// Solves in the variables y = x / variable_scale with the objective
// multiplied by objective_scale, so that a start of order one and
// multipliers of order one become the natural starting guess. The result
// is mapped back to the original variables and multipliers; residuals are
// re-evaluated there.
struct ProblemScaling {
  Vector variables;             // positive, one per variable
  double objective = 1.0;       // positive
};

KktResult kkt_solve_scaled(const NlpProblem& problem, const Vector& start, const ProblemScaling& scaling,
                           const KktOptions& options = {});

// Residual bundle of an arbitrary primal-dual point under the convention above.
KktResiduals kkt_residuals(const NlpProblem& problem, const Vector& x,
                           const Vector& multipliers,
                           const Vector& bound_multipliers);

// ---------------------------------------------------------------------------
// Damped fixed-point iteration x <- (1 - d) x + d map(x).

struct FixedPointResult {
  Vector point;
  int iterations = 0;
  double residual = kInf;  // ||x - map(x)||_inf at the returned point
  Status status = Status::kNoConvergence;
};

FixedPointResult fixed_point_iterate(const std::function<Vector(const Vector&)>& map,
                                     const Vector& start,
                                     const SolverSettings& settings);

// ---------------------------------------------------------------------------
// Central finite differences. `step` is absolute.

Vector finite_diff_gradient(const std::function<double(const Vector&)>& f,
                            const Vector& point, double step);

double finite_diff_derivative(const std::function<double(double)>& f, double x,
                              double step);

// d ln g / d ln x by a central difference in log space; exact for power laws.
double log_elasticity(const std::function<double(double)>& g, double x,
                      double relative_step);

// ---------------------------------------------------------------------------
// Exhaustive grid search, used as an independent oracle in tests and in
// `verify`. Dimensionality is limited to 4.

struct GridOracleResult {
  Vector point;
  double value = 0.0;
  std::size_t feasible_points = 0;
  std::size_t evaluated_points = 0;
};

enum class Sense { kMinimize, kMaximize };

struct GridOracleRequest {
  std::function<double(std::span<const double>)> objective;
  // Empty means every grid point is feasible.
  std::function<bool(std::span<const double>)> feasible;
  std::vector<double> lower;
  std::vector<double> upper;
  int resolution = 200;
  Sense sense = Sense::kMaximize;
  // 0 means ENERGYECON_THREADS or hardware concurrency.
  unsigned workers = 0;
};

// Throws Error(kNoFeasibleGridPoint) when no grid point passes the predicate.
// Ties are broken by the lexicographically smallest grid index, independent
// of the worker count.
GridOracleResult grid_oracle(const GridOracleRequest& request);

// Worker cap from ENERGYECON_THREADS, else hardware concurrency (>= 1).
unsigned worker_count();

}  // namespace energyecon::numerics
