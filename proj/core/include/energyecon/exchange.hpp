#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "energyecon/autarky.hpp"

namespace energyecon {

// Marginal energy transfer (J/unit) as a function of the quantity an agent
// produces. Curves are non-decreasing; constructors reject anything else
// they can check.
class MetcCurve {
 public:
  enum class Kind { kConstant, kLinear, kSampled, kFunction };

  MetcCurve() = default;  // zero constant curve

  static MetcCurve constant(std::string good, double level);
  // intercept + slope * q, slope >= 0.
  static MetcCurve linear(std::string good, double intercept, double slope);
  // Piecewise-linear through (q, tau) with strictly increasing q; linear
  // extrapolation along the end segments.
  static MetcCurve sampled(std::string good, std::vector<double> quantities, std::vector<double> transfers);
  // Caller guarantees monotonicity; integrals use adaptive quadrature.
  static MetcCurve from_function(std::string good, std::function<double(double)> fn);

  const std::string& good() const { return good_; }
  Kind kind() const { return kind_; }
  const std::vector<double>& quantities() const { return q_; }
  const std::vector<double>& transfers() const { return v_; }

  double operator()(double q) const;
  // Integral of the curve over [a, b]; exact for the closed forms.
  double integral(double a, double b) const;
  // Largest q in [0, cap] with curve(q) <= level; 0 when curve(0) > level.
  double quantity_at(double level, double cap) const;

 private:
  std::string good_;
  Kind kind_ = Kind::kConstant;
  double a_ = 0.0, b_ = 0.0;
  std::vector<double> q_, v_;
  std::shared_ptr<const std::function<double(double)>> fn_;
};

// One agent's side of one good's market.
struct MarketPosition {
  MetcCurve curve;
  double autarky_quantity = 0.0;  // produced and consumed without trade
  // Consumption response: demand(tau) = demand_scale / tau, calibrated at
  // autarky. Zero keeps consumption at the autarky quantity.
  double demand_scale = 0.0;

  double autarky_transfer() const { return curve(autarky_quantity); }
};

// Energy released by one good's trade between two agents, where
// `agent1_export` > 0 means agent 1 produces more and agent 2 less.
double trade_gain(const MarketPosition& agent1, const MarketPosition& agent2, double agent1_export);

// Two agents, two goods. Agent 1 is the natural exporter of `b`, agent 2 of
// `c`.
struct BilateralMarket {
  std::array<MarketPosition, 2> b;  // agent 1, agent 2
  std::array<MarketPosition, 2> c;
};

// q_b exported by agent 1, q_c exported by agent 2, less transaction costs.
double gains_from_trade(const BilateralMarket& market, double q_b, double q_c, double transaction_cost);

struct GoodTrade {
  std::string good;
  int exporter = -1;  // 0 or 1, -1 when nothing is traded
  double quantity = 0.0;
  std::array<double, 2> autarky_transfer{};
  std::array<double, 2> post_transfer{};
};

struct TradeOutcome {
  GoodTrade b, c;
  double commodity_price = 0.0;  // q_b / q_c = tau_c / tau_b after trade
  std::array<double, 2> reservation{};  // tau_c / tau_b of each agent at autarky
  bool within_reservation = true;
  double gains = 0.0;
  double transaction_cost = 0.0;
  std::array<double, 2> marginal_transaction_cost{};
  Status status = Status::kOk;  // kNoGainsFromTrade for a zero-trade outcome
};

// Solves importer transfer = exporter transfer + MTC per good; importers
// cannot produce below zero.
TradeOutcome optimal_bilateral_trade(const BilateralMarket& market, std::array<double, 2> marginal_transaction_cost = {});

struct TatonnementOptions {
  double damping = 0.5;
  double tolerance = 1e-8;
  int max_iterations = 500;
};

struct GoodMarketResult {
  std::string good;
  double level = 0.0;                // common marginal transfer
  std::vector<double> production;    // per agent
  std::vector<double> consumption;
  std::vector<double> net_exports;
  std::vector<double> post_transfer;
  double excess_demand = 0.0;
  double spread = 0.0;               // max |tau_i - level| over producing agents
  int iterations = 0;
  Status status = Status::kNoConvergence;
};

struct TatonnementResult {
  std::vector<GoodMarketResult> goods;
  Matrix commodity_prices;              // (a, b): level_b / level_a, units of a per unit of b
  std::vector<double> energy_released;  // per agent, J saved minus J added in production
  Status status = Status::kNoConvergence;
};

// `agents[i][g]` is agent i's position in good g; every agent lists the same
// goods in the same order. Throws Error(kInvalidArgument) on ragged input.
TatonnementResult multi_agent_tatonnement(const std::vector<std::vector<MarketPosition>>& agents,
                                          const TatonnementOptions& options = {});

struct MetcSampling {
  int points = 32;
  double lower = 0.25;  // as fractions of the autarky quantity
  double upper = 1.75;
};

// Re-solves the agent's producer problem with the target of `good` in
// `period` moved over a grid, other targets fixed. Infeasible grid points
// are dropped. Throws Error(kNonFiniteMarginal) when the good is not
// produced and Error(kInfeasible) with fewer than two feasible points.
MetcCurve sample_metc(const AutarkyEquilibrium& agent, const std::string& good, int period,
                      const MetcSampling& sampling = {});

// The same for several agents at once, one worker per agent.
std::vector<MetcCurve> sample_metcs(const std::vector<const AutarkyEquilibrium*>& agents, const std::string& good,
                                    int period, const MetcSampling& sampling = {});

}  // namespace energyecon
