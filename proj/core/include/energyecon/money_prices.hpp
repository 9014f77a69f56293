#pragma once

#include <span>
#include <string>
#include <vector>

#include "energyecon/autarky.hpp"

namespace energyecon {

// Real money is an ordinary good held as a medium of exchange; nominal
// money is a claim whose purchasing power is pinned to it.
struct MoneyState {
  std::string real_good;
  double real_transfer = 0.0;     // tau_m, J per unit of real money
  double real_quantity = 0.0;     // Q_m
  double nominal_quantity = 0.0;  // Q_n
  bool fiat = false;

  // tau_m Q_m / Q_n. Throws Error(kFiatMoney) for fiat money, whose link to
  // a real good is gone, and Error(kDomainError) for non-positive fields.
  double synthetic_transfer() const;
};

struct PriceRow {
  std::string good;
  double tau = 0.0;
  double real_price = 0.0;     // tau / tau_m
  double nominal_price = 0.0;  // tau / tau_s
};

struct PriceTable {
  double real_transfer = 0.0;
  double synthetic_transfer = 0.0;
  std::vector<PriceRow> rows;

  const PriceRow* find(const std::string& good) const;
  // P_a / P_b. Throws Error(kInvalidArgument) for unknown goods.
  double relative_nominal(const std::string& a, const std::string& b) const;
};

PriceTable price_table(std::span<const std::string> goods, std::span<const double> tau, const MoneyState& money);

struct PriceDynamics {
  std::vector<double> inflation;       // one per step t-1 -> t
  std::vector<double> dln_money_ratio; // dln(Q_n / Q_m)
  Matrix dln_real;                     // (k, step)
  Matrix dln_nominal;                  // (k, step)
  double identity_residual = 0.0;      // max |dln P - dln p - dln(Q_n/Q_m)|
};

// `money` holds one state per period and `tau` is (good, period). Log
// differences are taken between consecutive periods; goods with a zero
// transfer in either period get NaN. Throws Error(kDomainError) on
// non-positive money paths.
PriceDynamics inflation_and_dynamics(std::span<const MoneyState> money, const Matrix& tau);

// Energy overhead per unit of prime-mover service: build energy of each
// vintage spread over its survival-weighted service until the horizon.
double amortized_build_energy(double build_energy, double lifetime_service);

struct EmbodiedAccount {
  std::vector<std::string> goods;
  Matrix psi;          // (k, t), NaN where the good is not produced
  Matrix theta;
  Matrix overhead;     // Gamma, J/unit
  Matrix gamma;        // psi + overhead
  Matrix gamma_avg;
  Matrix eta;          // d ln gamma_avg / d ln Q along the marginal expansion direction
  Matrix service_overhead;  // (l, t), J per unit-period of prime-mover service
  Matrix build_energy;      // (l, vintage), J per unit; column 0 is the initial endowment
};

// Vintages are the initial endowment (build energy from the scenario) and
// each period's production (direct transfers eps'x spent on the good divided
// by units built). Throws Error(kMissingHistory) when a prime mover has a
// positive initial endowment and no recorded build energy.
Matrix service_overhead(const EconomyScenario& scenario, const SolutionBundle& bundle, Matrix* build_energy = nullptr);

EmbodiedAccount embodied_energy(const EconomyScenario& scenario, const SolutionBundle& bundle,
                                std::span<const TransferDecomposition> decomposition, double step = 1e-3);

struct GapRow {
  std::string good;
  double tau = 0.0;
  double gamma = 0.0;
  double gap = 0.0;       // theta - Gamma
  double residual = 0.0;  // tau - gamma - gap
};

std::vector<GapRow> transfer_embodied_gap(std::span<const std::string> goods, std::span<const double> tau,
                                          std::span<const double> gamma, std::span<const double> theta,
                                          std::span<const double> overhead);

struct ProportionalityRow {
  std::string good;
  double nominal_price = 0.0;
  double gamma_avg = 0.0;
  double eta = 0.0;
  double gap = 0.0;
  double fitted = 0.0;
  double fit_residual = 0.0;       // nominal_price - fitted
  double identity_residual = 0.0;  // P - (gamma_avg (1 + eta) + gap) / tau_s, relative to P
};

struct PairPrediction {
  std::string a, b;
  double nominal_ratio = 0.0;
  double embodied_ratio = 0.0;   // gamma_avg_a / gamma_avg_b
  double predicted_ratio = 0.0;  // from the embodied components
};

struct ProportionalityReport {
  int period = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<ProportionalityRow> rows;
  std::vector<PairPrediction> pairs;
  double max_identity_residual = 0.0;
};

// Least-squares fit of nominal prices on average embodied energy over the
// goods produced in `period`. The per-good identity mixes marginal gaps with
// average embodiment, since observed embodied energies are averages.
// Throws Error(kDegenerateFit) with fewer than two usable goods or when
// every gamma_avg is equal.
ProportionalityReport proportionality_report(const PriceTable& prices, const EmbodiedAccount& account, int period);

// Scenario's designated real-money good, or the produced good whose
// marginal transfer varies least with quantity (smallest mean |mu|).
std::string choose_real_money(const EconomyScenario& scenario, std::span<const TransferDecomposition> decomposition);

// One money state per period from the solved bundle. Throws
// Error(kInvalidArgument) when the scenario has no money block.
std::vector<MoneyState> money_path(const EconomyScenario& scenario, const AutarkyEquilibrium& equilibrium);

}  // namespace energyecon
