#pragma once

#include <string>
#include <vector>

#include "energyecon/allocation.hpp"
#include "energyecon/consumer.hpp"
#include "energyecon/energy_sector.hpp"
#include "energyecon/planner.hpp"
#include "energyecon/producer_solver.hpp"

namespace energyecon {

// All equilibrium unknowns of one agent.
struct SolutionBundle {
  std::vector<Matrix> allocations;      // per period, (l, k)
  Matrix quantities;                    // (k, t)
  std::vector<double> lambda;           // utils/J
  Matrix tau;                           // (k, t), J/unit
  Matrix phi;                           // (l, t), J/unit-period
  std::vector<double> over_assignment;  // Theta_t
  std::vector<double> surplus;          // E_t, J
  Matrix assignment;                    // (f, t), Lambda, J/unit
  Matrix beta;                          // (t, i)
  Matrix endowment;                     // (l, t)
  std::vector<double> power;            // P_t, W
};

struct AutarkyDiagnostics {
  int iterations = 0;
  numerics::KktResiduals planner;
  ProducerResiduals producer;           // planner allocation checked as a producer optimum
  ProducerResiduals producer_resolve;   // independent solve_transfer_min at the planner's targets
  double producer_tau_gap = 0.0;        // max |tau(resolve) - tau(bundle)| over produced goods
  double producer_objective_gap = 0.0;  // relative gap of eps'x between the two
  double surplus_stationarity = 0.0;
  double surplus_tau_gap = 0.0;         // max |tau_e - beta delta| over produced energy goods
  double meroi_spread = 0.0;            // max over t of the mEROI spread across energy goods
  double beta_meroi_gap = 0.0;          // max |beta_{t,1} mEROI_{e,t} - 1|
  double capital_stationarity = 0.0;
  double fisher_gap = 0.0;              // max |tau_{l,t} - discounted phi stream| over produced movers
  double consumer_foc = 0.0;            // max |U/lambda - tau|
  double euler = 0.0;
  double effective_assignment = 0.0;    // max |(1 - Theta) Lambda - U/lambda|
  double budget_violation = 0.0;        // max (spent - E_t, 0)
  double budget_slack_binding = 0.0;    // max |slack| where lambda > 0
  double scarcity_formula_gap = 0.0;    // max |phi - clamped average-marginal-surplus formula|
  std::string allocation_status = "ok";
  bool multiplicity_checked = false;
  bool multiple_equilibria = false;
  Status status = Status::kNoConvergence;

  // Largest of the residuals that must vanish at an equilibrium.
  double max_residual() const;
};

struct AutarkyEquilibrium {
  SolutionBundle bundle;
  std::vector<TransferDecomposition> decomposition;  // produced goods, every period
  ProducerProblem producer_problem;
  ProducerSolution producer;                         // the planner's allocation in producer form
  SurplusPlan surplus_plan;
  CapitalPlan capital_plan;
  AllocationPlan allocation;                         // filled when allocation_status == "ok"
  double utility = 0.0;
  AutarkyDiagnostics diagnostics;
  Status status = Status::kNoConvergence;

  const TransferDecomposition* find(const std::string& good, int period) const;
};

struct AutarkyOptions {
  bool check_multiplicity = false;
  double fd_step = 1e-3;
};

// Throws Error(kValidation) for invalid scenarios, Error(kInfeasible) when
// no positive-consumption plan exists and Error(kDomainError) when the
// energy budget is slack in some period (marginal utility of energy zero,
// so discount factors are undefined). Non-convergence is reported through
// `status` with the best iterate.
AutarkyEquilibrium solve_autarky(const EconomyScenario& scenario, const AutarkyOptions& options = {});

}  // namespace energyecon
