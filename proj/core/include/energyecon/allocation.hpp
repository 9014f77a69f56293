#pragma once

#include <optional>
#include <span>
#include <vector>

#include "energyecon/numerics.hpp"

namespace energyecon {

using numerics::Matrix;

struct AllocationPlan {
  Matrix assignment;            // (f, t), requested Lambda, J/unit
  std::vector<double> over_assignment;  // Theta_t
  Matrix implied_over_assignment;       // (f, t), 1 - tau/Lambda per good
  Matrix output;                // (f, t)
  Matrix effective_assignment;  // (f, t), (1 - Theta) Lambda
};

// Reconciles requested per-unit assignments with marginal transfers.
// Theta_t is read off each good as 1 - tau/Lambda; the goods must agree to
// within `tolerance` and the common value must lie in [0, 1), otherwise
// Error(kInconsistentAssignments) is thrown with the per-good values.
// Outputs are the largest multiple of `reference` (default: equal energy
// shares) that satisfies sum_f Lambda_f Q_f <= E_t. Throws
// Error(kInsufficientSurplus) when E_t = 0 and output is requested.
AllocationPlan allocate_surplus(std::span<const double> surplus, const Matrix& tau, const Matrix& requested,
                                const std::optional<Matrix>& reference = std::nullopt, double tolerance = 1e-9);

// Theta_t in [0, 1) with (1 - Theta_t) Lambda_{f,t} = tau_{f,t}; the
// assignment that makes every good consistent.
std::vector<double> over_assignment_from_budget(std::span<const double> surplus, const Matrix& tau,
                                                const Matrix& quantity);

// (1 - Theta_t) Lambda_{f,t} - U_{f,t} / lambda_t.
Matrix effective_assignment_check(const AllocationPlan& plan, const Matrix& utility_marginals,
                                  std::span<const double> lambda);

}  // namespace energyecon
