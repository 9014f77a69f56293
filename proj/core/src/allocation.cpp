#include "energyecon/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace energyecon {

AllocationPlan allocate_surplus(std::span<const double> surplus, const Matrix& tau, const Matrix& requested,
                                const std::optional<Matrix>& reference, double tolerance) {
  const Eigen::Index F = tau.rows();
  const Eigen::Index T = tau.cols();
  if (requested.rows() != F || requested.cols() != T || static_cast<std::size_t>(T) != surplus.size() ||
      (reference && (reference->rows() != F || reference->cols() != T))) {
    throw Error(ErrorCode::kInvalidArgument, "allocate_surplus: shapes do not match");
  }
  AllocationPlan plan;
  plan.assignment = requested;
  plan.over_assignment.assign(static_cast<std::size_t>(T), 0.0);
  plan.implied_over_assignment = Matrix::Zero(F, T);
  plan.output = Matrix::Zero(F, T);
  plan.effective_assignment = Matrix::Zero(F, T);

  for (Eigen::Index t = 0; t < T; ++t) {
    const double energy = surplus[static_cast<std::size_t>(t)];
    if (!(energy >= 0.0)) throw Error(ErrorCode::kDomainError, "allocate_surplus: surplus must be >= 0");
    double lo = numerics::kInf, hi = -numerics::kInf;
    for (Eigen::Index f = 0; f < F; ++f) {
      if (!(tau(f, t) > 0.0) || !(requested(f, t) > 0.0)) {
        throw Error(ErrorCode::kDomainError, "allocate_surplus: tau and requested assignments must be > 0");
      }
      double theta = 1.0 - tau(f, t) / requested(f, t);
      plan.implied_over_assignment(f, t) = theta;
      lo = std::min(lo, theta);
      hi = std::max(hi, theta);
    }
    if (F == 0) continue;
    if (hi - lo > tolerance || lo < -tolerance || hi >= 1.0) {
      std::ostringstream msg;
      msg << "allocate_surplus: no common over-assignment in [0,1) for period " << t + 1 << "; implied values";
      for (Eigen::Index f = 0; f < F; ++f) msg << ' ' << plan.implied_over_assignment(f, t);
      throw Error(ErrorCode::kInconsistentAssignments, msg.str());
    }
    const double theta = std::max(0.0, 0.5 * (lo + hi));
    plan.over_assignment[static_cast<std::size_t>(t)] = theta;

    double demand = 0.0;
    for (Eigen::Index f = 0; f < F; ++f) {
      double ref = reference ? (*reference)(f, t) : 1.0 / requested(f, t);
      demand += requested(f, t) * ref;
    }
    if (demand > 0.0 && energy <= 0.0) {
      throw Error(ErrorCode::kInsufficientSurplus,
                  "allocate_surplus: no energy surplus to assign in period " + std::to_string(t + 1));
    }
    const double scale = demand > 0.0 ? energy / demand : 0.0;
    for (Eigen::Index f = 0; f < F; ++f) {
      double ref = reference ? (*reference)(f, t) : 1.0 / requested(f, t);
      plan.output(f, t) = scale * ref;
      plan.effective_assignment(f, t) = (1.0 - theta) * requested(f, t);
    }
  }
  return plan;
}

std::vector<double> over_assignment_from_budget(std::span<const double> surplus, const Matrix& tau,
                                                const Matrix& quantity) {
  std::vector<double> theta(surplus.size(), 0.0);
  for (Eigen::Index t = 0; t < tau.cols(); ++t) {
    double cost = 0.0;
    for (Eigen::Index f = 0; f < tau.rows(); ++f) cost += tau(f, t) * quantity(f, t);
    double energy = surplus[static_cast<std::size_t>(t)];
    theta[static_cast<std::size_t>(t)] = energy > 0.0 ? 1.0 - cost / energy : 0.0;
  }
  return theta;
}

Matrix effective_assignment_check(const AllocationPlan& plan, const Matrix& marginals, std::span<const double> lambda) {
  Matrix r = plan.effective_assignment;
  for (Eigen::Index t = 0; t < r.cols(); ++t) {
    double lam = lambda[static_cast<std::size_t>(t)];
    if (!(lam > 0.0)) throw Error(ErrorCode::kDomainError, "effective_assignment_check: lambda must be > 0");
    for (Eigen::Index f = 0; f < r.rows(); ++f) r(f, t) -= marginals(f, t) / lam;
  }
  return r;
}

}  // namespace energyecon
