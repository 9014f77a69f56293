#pragma once

#include <optional>
#include <vector>

#include "energyecon/economy_model.hpp"

namespace energyecon {

// The agent's whole-horizon problem in physical form: choose prime-mover
// allocations x_{l,k,t} >= 0 to maximize utility subject to
//   sum_k x_{l,k,t} <= x~_{l,t}(prime-mover production in earlier periods)
//   eps' x_{.,t}     <= sum_e delta_e Q_{e,t-1}
// The energy-budget multiplier is lambda_t and the capacity multiplier is
// lambda_t * phi_{l,t}. Energy goods and prime movers produced in the last
// period carry no value and are not produced.
struct PlannerOptions {
  double tolerance = 1e-14;
  double acceptable = 1e-10;
  int max_iterations = 400;
  // Fraction of the estimated capacity used by the starting point.
  double start_fraction = 0.5;
  // When the first solve stalls, intermediate goods produced below this
  // fraction of the period's largest output are fixed at zero and the
  // problem is solved again.
  double negligible_output = 1e-5;
};

struct PlannerSolution {
  std::vector<Matrix> allocations;  // per period, (l, k)
  Matrix quantities;                // (k, t)
  Matrix endowment;                 // (l, t), x~
  std::vector<double> lambda;       // utils/J
  Matrix phi;                       // (l, t), J/unit-period
  Matrix available;                 // (l, t), 1 where the prime mover can exist
  std::vector<double> surplus;      // E_t = sum_e delta_e Q_{e,t-1} - eps' x_{e,t}
  std::vector<double> budget_slack; // E_t - eps' x_{f,t} - eps' x_{L,t}
  double utility = 0.0;
  numerics::KktResiduals residuals;
  int iterations = 0;
  Status status = Status::kNoConvergence;
};

// Throws Error(kInfeasible) when some final good with positive weight
// cannot be produced at all in its period (no usable prime movers, or no
// energy to run them).
void check_planner_feasibility(const EconomyScenario& scenario);

PlannerSolution solve_planner(const EconomyScenario& scenario, const PlannerOptions& options = {});

}  // namespace energyecon
