#pragma once

#include <optional>
#include <span>
#include <memory>
#include <string>
#include <vector>

#include "energyecon/economy_model.hpp"

namespace energyecon {

// Direct-energy-transfer minimization: for every period, minimize eps'x
// subject to f_k(x_k) >= target_k and sum_k x_{l,k} <= endowment_l.
// Periods are independent because lambda_t scales each period's Lagrangian
// as a whole; tau and phi are reported per period in Joules.
struct ProducerProblem {
  std::vector<std::string> good_ids;
  std::vector<std::string> prime_mover_ids;
  // Aligned with good_ids; nullptr marks a good without a technology, whose
  // target must then be zero.
  std::vector<const ProductionTech*> technologies;
  // Keeps the pointees alive when the problem was built from a scenario
  // that may not outlive it.
  std::shared_ptr<const std::vector<ProductionTech>> owned_technologies;
  std::vector<double> epsilon;  // per prime mover
  Matrix targets;               // (k, t)
  Matrix endowments;            // (l, t)
  std::vector<double> lambda;   // per period; must be > 0
  double tolerance = 1e-13;   // target residual of the interior point
  double acceptable = 1e-10;  // residual still accepted as converged
  int max_iterations = 300;

  std::size_t num_goods() const { return good_ids.size(); }
  std::size_t num_prime_movers() const { return prime_mover_ids.size(); }
  int horizon() const { return static_cast<int>(targets.cols()); }
};

// Builds the problem for every good of a scenario.
ProducerProblem make_producer_problem(const EconomyScenario& scenario, const Matrix& targets,
                                      const Matrix& endowments, std::vector<double> lambda);

struct ProducerResiduals {
  double stationarity = 0.0;     // |tau f_{l,k} - eps_l - phi_l| over used (l,k)
  double primal = 0.0;           // target shortfall and capacity excess
  double dual = 0.0;             // negative part of phi
  double complementarity = 0.0;  // |phi_l (endowment_l - sum_k x_{l,k})|
  double max() const;
};

struct ProducerSolution {
  std::vector<Matrix> allocations;  // per period, (l, k)
  Matrix tau;                       // (k, t), J/unit
  Matrix phi;                       // (l, t), J/unit-period
  std::vector<double> objective;    // per period, J
  std::vector<ProducerResiduals> residuals;
  std::vector<int> iterations;
  Status status = Status::kOk;

  double total_objective() const;
  ProducerResiduals worst_residuals() const;
};

// Throws Error(kInfeasible) when some period's targets exceed what the
// endowments can produce. NoConvergence is reported through `status` with
// the best iterate.
ProducerSolution solve_transfer_min(const ProducerProblem& problem);

// Residuals of an arbitrary (allocation, tau, phi) for one period, computed
// straight from the definitions.
ProducerResiduals producer_residuals(const ProducerProblem& problem, int period,
                                     const Matrix& allocation, std::span<const double> tau,
                                     std::span<const double> phi);

// Per-good decomposition of the marginal energy transfer.
//   psi   = sum_l w_l eps_l g'_l   (direct transfers)
//   theta = sum_l w_l phi_l g'_l   (power scarcity cost)
// with w_l the marginal input shares along the expansion path at prices
// eps + phi. For single-input and equal-share technologies these are the
// plain 1/L averages, which are also reported as psi_uniform/theta_uniform.
struct TransferDecomposition {
  std::string good;
  int period = 0;
  double psi = 0.0;
  double theta = 0.0;
  double tau = 0.0;        // psi + theta
  double tau_kkt = 0.0;    // multiplier from the solve
  double tau_avg = 0.0;    // sum_l (eps_l + phi_l) x_l / Q
  double mu = 0.0;         // d ln tau_avg / d ln Q at fixed input prices
  double psi_uniform = 0.0;
  double theta_uniform = 0.0;
  int used_prime_movers = 0;
  std::vector<double> marginal_shares;
  std::vector<double> marginal_requirements;  // g'_l, +inf for unused inputs
};

// Low-level combination of the per-input pieces.
struct TransferComponents {
  double psi = 0.0;
  double theta = 0.0;
  double tau = 0.0;
};
TransferComponents transfer_components(std::span<const double> epsilon, std::span<const double> phi,
                                       std::span<const double> marginal_requirements,
                                       std::span<const double> weights);

// Throws Error(kNonFiniteMarginal) for goods with a zero target or a used
// input at a boundary.
TransferDecomposition decompose_marginal_transfer(const ProducerProblem& problem,
                                                  const ProducerSolution& solution,
                                                  std::size_t good, int period, double step);

}  // namespace energyecon
