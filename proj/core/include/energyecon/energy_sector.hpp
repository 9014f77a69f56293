#pragma once

#include <span>
#include <vector>

#include "energyecon/consumer.hpp"
#include "energyecon/economy_model.hpp"

namespace energyecon {

struct SurplusPlan {
  Matrix production;                // (e, t), Q_{e,t}; zero in the last period
  std::vector<Matrix> allocations;  // per period, (l, e)
  std::vector<double> surplus;      // E_t, J
  Matrix tau;                       // (e, t), J/unit
  Matrix tau_avg;                   // (e, t), J/unit; NaN when not produced
  Matrix meroi;                     // (e, t); NaN when not produced
  Matrix aeroi;                     // (e, t); NaN when not produced
  Matrix capacity_multipliers;      // (l, t), shadow value of the capacity cap
  std::vector<double> stationarity; // per period, worst |beta delta f_l - eps_l - phi_l - cap_l|
  Status status = Status::kOk;
};

// Energy-surplus maximization with scarcity costs taken as given: in each
// period t < T, choose inputs to maximize
//   beta_{t,1} sum_e delta_e f_e(x_e) - sum_{l,e} (eps_l + phi_{l,t}) x_{l,e}
// subject to sum_e x_{l,e} <= capacity_{l,t}. Energy produced in the last
// period has no value. T = 1 gives Status::kDegenerateHorizon and a
// zero-production plan.
SurplusPlan solve_surplus_plan(const EconomyScenario& scenario, std::span<const double> lambda, const Matrix& phi,
                               const Matrix& capacity);

// E_t = sum_e delta_e Q_{e,t-1} - eps' x_{e,t}, with Q_{e,0} the initial stock.
std::vector<double> surplus_schedule(const EconomyScenario& scenario, const Matrix& production,
                                     const std::vector<Matrix>& allocations);

// Discounted marginal surplus of each prime mover, averaged over the energy
// goods flagged as produced and clamped at zero. `marginal` is (l, e).
std::vector<double> power_scarcity_cost(const EconomyScenario& scenario, double beta, const Matrix& marginal,
                                        const std::vector<bool>& produced);

struct EroiReport {
  double meroi = 0.0;
  double aeroi = 0.0;
  double implied_beta = 0.0;
};

// Throws Error(kDivisionByZero) when tau or tau_avg is zero.
EroiReport eroi_and_discount(double energy_content, double tau, double tau_avg);

// x~_t = sum_{i=0}^{t-1} d^i Q_{t-1-i} for t = 1..T, where production[j] is
// the output of period j + 1 and Q_0 is the initial endowment.
std::vector<double> endowment_path(std::span<const double> production, double initial, double depreciation,
                                   int horizon);

struct CapitalPlan {
  Matrix production;                // (l, t), units of prime mover produced
  std::vector<Matrix> allocations;  // per period, (input l', produced l)
  Matrix endowment;                 // (l, t), from endowment_path
  Matrix tau;                       // (l, t), producer-side marginal transfer
  Matrix lifetime_value;            // (l, t), discounted future scarcity-cost stream
  Matrix capacity_multipliers;      // (l, t)
  std::vector<double> power;        // P_t, W
  std::vector<double> stationarity; // per period
  Status status = Status::kOk;
};

// sum_{i=1}^{T-t} beta_{t,i} phi_{l,t+i} d_l^{i-1}; zero in the last period.
Matrix lifetime_values(const EconomyScenario& scenario, const Matrix& beta, const Matrix& phi);

// Prime-mover accumulation at given scarcity costs. In each period t < T,
// maximize sum_l V_{l,t} f_l(x_l) - sum (eps + phi_t)' x_l under the
// capacity cap. The endowment path is rebuilt from the planned production.
CapitalPlan solve_capital_plan(const EconomyScenario& scenario, std::span<const double> lambda, const Matrix& phi,
                               const Matrix& capacity);

// P_t = sum_l p_l x~_{l,t}.
std::vector<double> aggregate_power(const EconomyScenario& scenario, const Matrix& endowment);

}  // namespace energyecon
