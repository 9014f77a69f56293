#include "energyecon/autarky.hpp"

#include <algorithm>
#include <cmath>

#include "energyecon/cost.hpp"

namespace energyecon {

namespace {

constexpr double kProduced = 1e-12;

double produced_threshold(double scale) { return kProduced * std::max(1.0, scale); }

// The interior point leaves goods that sit at their lower bound with
// inputs around 1e-17 (outputs, through fractional exponents, nearer
// 1e-10). Those are zeros; left in, they pose as produced goods with
// meaningless marginal conditions.
void drop_bound_residue(PlannerSolution& plan) {
  for (Eigen::Index t = 0; t < plan.quantities.cols(); ++t) {
    const double top = plan.quantities.col(t).cwiseAbs().maxCoeff();
    const Matrix& alloc = plan.allocations[static_cast<std::size_t>(t)];
    for (Eigen::Index k = 0; k < plan.quantities.rows(); ++k) {
      bool residue = plan.quantities(k, t) <= 1e-10 * std::max(1.0, top);
      bool idle = true;
      for (Eigen::Index l = 0; l < alloc.rows(); ++l) {
        idle = idle && alloc(l, k) <= 1e-12 * std::max(1.0, plan.endowment(l, t));
      }
      if (!residue && !idle) continue;
      plan.quantities(k, t) = 0.0;
      plan.allocations[static_cast<std::size_t>(t)].col(k).setZero();
    }
  }
}

// Marginal transfer of good k at the planner allocation, read off the
// producer first-order conditions at input prices eps + phi.
double planner_tau(const ProductionTech& tech, std::span<const double> inputs, std::span<const double> prices) {
  double out = production_output(tech, inputs);
  if (!(out > kProduced)) return cost_min(tech, prices, 0.0).marginal_cost;
  if (tech.form == TechForm::kLinear) return cost_min(tech, prices, out).marginal_cost;
  const double s = tech.returns_to_scale();
  double tau = 0.0;
  for (std::size_t l = 0; l < inputs.size(); ++l) {
    double a = tech.coefficients[l];
    if (a <= 0.0) continue;
    // (a/s) * price * g'_l with g'_l = x_l / (a Q).
    tau += (a / s) * prices[l] * inputs[l] / (a * out);
  }
  return tau;
}

std::vector<double> column(const Matrix& m, Eigen::Index t) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = m(r, t);
  return v;
}

}  // namespace

double AutarkyDiagnostics::max_residual() const {
  return std::max({planner.max(), producer.max(), consumer_foc, euler, effective_assignment, budget_violation,
                   budget_slack_binding, fisher_gap, meroi_spread, beta_meroi_gap});
}

const TransferDecomposition* AutarkyEquilibrium::find(const std::string& good, int period) const {
  for (const auto& d : decomposition) {
    if (d.good == good && d.period == period) return &d;
  }
  return nullptr;
}

AutarkyEquilibrium solve_autarky(const EconomyScenario& s, const AutarkyOptions& options) {
  if (auto v = validate_scenario(s); !v.empty()) {
    throw Error(ErrorCode::kValidation, "scenario invalid: " + v.front().field + ": " + v.front().rule);
  }
  const int T = s.horizon;
  const std::size_t K = s.num_goods();
  const std::size_t L = s.num_prime_movers();
  const std::size_t F = s.num_final_goods();
  const std::size_t E = s.num_energy_goods();
  const auto Ki = static_cast<Eigen::Index>(K);
  const auto Li = static_cast<Eigen::Index>(L);
  const auto Fi = static_cast<Eigen::Index>(F);
  const std::vector<double> eps = s.epsilon();

  PlannerOptions popt;
  popt.acceptable = s.solver.tolerance;
  popt.max_iterations = std::min(s.solver.max_iterations, 1000);
  PlannerSolution plan = solve_planner(s, popt);
  drop_bound_residue(plan);

  AutarkyEquilibrium eq;
  AutarkyDiagnostics& diag = eq.diagnostics;
  diag.planner = plan.residuals;
  diag.iterations = plan.iterations;
  eq.utility = plan.utility;

  double lambda_max = *std::max_element(plan.lambda.begin(), plan.lambda.end());
  for (int t = 0; t < T; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    // Relative multipliers miss a single slack period; unspent energy does not.
    const bool unspent = plan.budget_slack[ti] > 1e-6 * std::max(1.0, std::abs(plan.surplus[ti]));
    if (unspent || !(plan.lambda[ti] > 1e-8 * lambda_max)) {
      throw Error(ErrorCode::kDomainError, "energy budget is slack in period " + std::to_string(t + 1) +
                                               ": marginal utility of energy is zero and discount factors are undefined");
    }
  }

  SolutionBundle& b = eq.bundle;
  b.allocations = plan.allocations;
  b.quantities = plan.quantities;
  b.lambda = plan.lambda;
  b.phi = plan.phi;
  b.surplus = plan.surplus;
  b.endowment = plan.endowment;
  b.beta = discount_factors(b.lambda);
  b.power = aggregate_power(s, b.endowment);

  // Marginal transfers at the planner allocation.
  const std::vector<std::string> ids = s.good_ids();
  std::vector<const ProductionTech*> techs;
  for (const auto& id : ids) techs.push_back(s.technology_for(id));
  b.tau = Matrix::Zero(Ki, T);
  for (int t = 0; t < T; ++t) {
    std::vector<double> prices(L);
    for (std::size_t l = 0; l < L; ++l) prices[l] = eps[l] + b.phi(static_cast<Eigen::Index>(l), t);
    for (std::size_t k = 0; k < K; ++k) {
      if (techs[k] == nullptr) continue;
      std::vector<double> x = column(b.allocations[static_cast<std::size_t>(t)], static_cast<Eigen::Index>(k));
      b.tau(static_cast<Eigen::Index>(k), t) = planner_tau(*techs[k], x, prices);
    }
  }

  // The planner allocation seen as a producer optimum.
  eq.producer_problem = make_producer_problem(s, b.quantities, b.endowment, b.lambda);
  eq.producer.allocations = b.allocations;
  eq.producer.tau = b.tau;
  eq.producer.phi = b.phi;
  eq.producer.status = plan.status;
  for (int t = 0; t < T; ++t) {
    const Matrix& x = b.allocations[static_cast<std::size_t>(t)];
    double objective = 0.0;
    for (std::size_t l = 0; l < L; ++l) objective += eps[l] * x.row(static_cast<Eigen::Index>(l)).sum();
    eq.producer.objective.push_back(objective);
    eq.producer.iterations.push_back(0);
    std::vector<double> tau_t = column(b.tau, t), phi_t = column(b.phi, t);
    eq.producer.residuals.push_back(producer_residuals(eq.producer_problem, t, x, tau_t, phi_t));
  }
  diag.producer = eq.producer.worst_residuals();

  // Independent re-solve of the producer problem at the planner's targets.
  try {
    ProducerSolution resolve = solve_transfer_min(eq.producer_problem);
    diag.producer_resolve = resolve.worst_residuals();
    for (int t = 0; t < T; ++t) {
      double a = resolve.objective[static_cast<std::size_t>(t)], c = eq.producer.objective[static_cast<std::size_t>(t)];
      diag.producer_objective_gap = std::max(diag.producer_objective_gap, std::abs(a - c) / std::max(1.0, std::abs(c)));
      for (std::size_t k = 0; k < K; ++k) {
        auto ki = static_cast<Eigen::Index>(k);
        if (!(b.quantities(ki, t) > produced_threshold(b.quantities(ki, t)))) continue;
        diag.producer_tau_gap = std::max(diag.producer_tau_gap, std::abs(resolve.tau(ki, t) - b.tau(ki, t)));
      }
    }
  } catch (const Error&) {
    diag.producer_resolve.primal = numerics::kInf;
  }

  for (int t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      if (techs[k] == nullptr || !(b.quantities(static_cast<Eigen::Index>(k), t) > kProduced)) continue;
      eq.decomposition.push_back(decompose_marginal_transfer(eq.producer_problem, eq.producer, k, t, options.fd_step));
    }
  }

  // Energy sector at the equilibrium multipliers.
  eq.surplus_plan = solve_surplus_plan(s, b.lambda, b.phi, b.endowment);
  for (double v : eq.surplus_plan.stationarity) diag.surplus_stationarity = std::max(diag.surplus_stationarity, v);
  for (int t = 0; t + 1 < T; ++t) {
    double lo = numerics::kInf, hi = -numerics::kInf;
    const double beta1 = b.beta(t, 1);
    std::vector<bool> produced(E, false);
    Matrix marginal = Matrix::Zero(Li, static_cast<Eigen::Index>(E));
    for (std::size_t e = 0; e < E; ++e) {
      auto ei = static_cast<Eigen::Index>(e);
      auto k = static_cast<Eigen::Index>(s.energy_index(e));
      double delta = s.energy_goods[e].energy_content;
      if (eq.surplus_plan.production(ei, t) > kProduced) {
        diag.surplus_tau_gap = std::max(diag.surplus_tau_gap, std::abs(eq.surplus_plan.tau(ei, t) - beta1 * delta));
      }
      if (!(b.quantities(k, t) > kProduced)) continue;
      produced[e] = true;
      double meroi = delta / b.tau(k, t);
      lo = std::min(lo, meroi);
      hi = std::max(hi, meroi);
      diag.beta_meroi_gap = std::max(diag.beta_meroi_gap, std::abs(beta1 * meroi - 1.0));
      std::vector<double> x = column(b.allocations[static_cast<std::size_t>(t)], k);
      const ProductionTech& tech = *techs[static_cast<std::size_t>(k)];
      double out = production_output(tech, x);
      for (std::size_t l = 0; l < L; ++l) {
        double a = tech.coefficients[l];
        if (a <= 0.0) continue;
        marginal(static_cast<Eigen::Index>(l), ei) =
            tech.form == TechForm::kLinear ? tech.scale * a : (x[l] > 0.0 ? a * out / x[l] : 0.0);
      }
    }
    if (hi >= lo) diag.meroi_spread = std::max(diag.meroi_spread, hi - lo);
    std::vector<double> formula = power_scarcity_cost(s, beta1, marginal, produced);
    for (std::size_t l = 0; l < L; ++l) {
      diag.scarcity_formula_gap =
          std::max(diag.scarcity_formula_gap, std::abs(formula[l] - b.phi(static_cast<Eigen::Index>(l), t)));
    }
  }

  eq.capital_plan = solve_capital_plan(s, b.lambda, b.phi, b.endowment);
  for (double v : eq.capital_plan.stationarity) diag.capital_stationarity = std::max(diag.capital_stationarity, v);
  for (std::size_t l = 0; l < L; ++l) {
    auto k = static_cast<Eigen::Index>(s.prime_mover_good_index(l));
    for (int t = 0; t + 1 < T; ++t) {
      if (!(b.quantities(k, t) > kProduced)) continue;
      double stream = eq.capital_plan.lifetime_value(static_cast<Eigen::Index>(l), t);
      diag.fisher_gap = std::max(diag.fisher_gap, std::abs(b.tau(k, t) - stream));
    }
  }

  // Consumer conditions over goods and periods with positive weight.
  UtilityModel u = s.utility();
  Matrix final_q = b.quantities.topRows(Fi);
  Matrix marginals = Matrix::Zero(Fi, T);
  for (Eigen::Index f = 0; f < Fi; ++f) {
    for (int t = 0; t < T; ++t) {
      if (u.weights(f, t) > 0.0) marginals(f, t) = u.weights(f, t) / final_q(f, t);
    }
  }
  Matrix final_tau = b.tau.topRows(Fi);
  Matrix foc = consumer_foc_residual(marginals, b.lambda, final_tau);
  for (Eigen::Index f = 0; f < Fi; ++f) {
    for (int t = 0; t < T; ++t) {
      if (u.weights(f, t) > 0.0) diag.consumer_foc = std::max(diag.consumer_foc, std::abs(foc(f, t)));
    }
  }
  diag.euler = max_abs(euler_residual(marginals, b.beta, final_tau));

  // Energy budget and its complementary slackness.
  for (int t = 0; t < T; ++t) {
    double slack = plan.budget_slack[static_cast<std::size_t>(t)];
    diag.budget_violation = std::max(diag.budget_violation, -slack);
    diag.budget_slack_binding = std::max(diag.budget_slack_binding, std::abs(slack) / std::max(1.0, b.surplus[static_cast<std::size_t>(t)]));
  }

  // Surplus assignment: the proposal Lambda = tau / (1 - Theta) with Theta
  // read off the budget.
  b.over_assignment = over_assignment_from_budget(b.surplus, final_tau, final_q);
  b.assignment = Matrix::Zero(Fi, T);
  Matrix effective = Matrix::Zero(Fi, T);
  for (int t = 0; t < T; ++t) {
    double theta = b.over_assignment[static_cast<std::size_t>(t)];
    for (Eigen::Index f = 0; f < Fi; ++f) {
      b.assignment(f, t) = final_tau(f, t) / (1.0 - theta);
      effective(f, t) = (1.0 - theta) * b.assignment(f, t);
      if (u.weights(f, t) > 0.0) {
        diag.effective_assignment =
            std::max(diag.effective_assignment, std::abs(effective(f, t) - marginals(f, t) / b.lambda[static_cast<std::size_t>(t)]));
      }
    }
  }
  try {
    eq.allocation = allocate_surplus(b.surplus, final_tau, b.assignment, final_q);
  } catch (const Error& e) {
    diag.allocation_status = std::string(to_string(e.code())) + ": " + e.what();
  }

  if (options.check_multiplicity) {
    PlannerOptions other = popt;
    other.start_fraction = 0.2;
    PlannerSolution alt = solve_planner(s, other);
    diag.multiplicity_checked = true;
    double gap = 0.0;
    for (Eigen::Index k = 0; k < Ki; ++k) {
      for (int t = 0; t < T; ++t) {
        gap = std::max(gap, std::abs(alt.quantities(k, t) - b.quantities(k, t)) / std::max(1.0, b.quantities(k, t)));
      }
    }
    diag.multiple_equilibria = alt.status == Status::kOk && gap > 1e-6;
  }

  diag.status = plan.status == Status::kOk && diag.max_residual() <= 1e-6 ? Status::kOk : Status::kNoConvergence;
  eq.status = diag.status;
  return eq;
}

}  // namespace energyecon
