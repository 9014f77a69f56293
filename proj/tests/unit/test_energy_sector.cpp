#include <gtest/gtest.h>

#include <cmath>

#include "energyecon/autarky.hpp"
#include "energyecon/energy_sector.hpp"
#include "fixtures.hpp"

namespace {

using namespace energyecon;
using namespace energyecon::testing;

// One energy good (grain), one final good (bread), one prime mover.
EconomyScenario farm(int horizon, TechForm form) {
  EconomyScenario s = bare(horizon);
  s.prime_movers.push_back({"worker", 10.0, 10.0, 0.9, 4.0, 50.0});
  s.energy_goods.push_back({"grain", 100.0, 1.0});
  s.final_goods.push_back({"bread", std::vector<double>(static_cast<std::size_t>(horizon), 1.0)});
  s.technologies.push_back({"bread", form, 1.0, {0.5}});
  s.technologies.push_back({"grain", form, 1.0, {form == TechForm::kLinear ? 0.5 : 0.6}});
  return s;
}

TEST(Surplus, StockFeedsFirstPeriod) {
  EconomyScenario s = farm(2, TechForm::kLinear);
  Matrix production = Matrix::Zero(1, 2);
  std::vector<Matrix> alloc(2, Matrix::Zero(1, 1));
  auto e = surplus_schedule(s, production, alloc);
  EXPECT_DOUBLE_EQ(e[0], 100.0);
  EXPECT_DOUBLE_EQ(e[1], 0.0);
}

TEST(Surplus, DirectTransfersAreDeducted) {
  EconomyScenario s = farm(2, TechForm::kLinear);
  Matrix production(1, 2);
  production << 0.5, 0.0;
  std::vector<Matrix> alloc{Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1)};
  auto e = surplus_schedule(s, production, alloc);
  EXPECT_DOUBLE_EQ(e[0], 100.0 - 10.0);
  EXPECT_DOUBLE_EQ(e[1], 50.0);
}

TEST(Surplus, EnergyPricedAtDiscountedContent) {
  EconomyScenario s = farm(2, TechForm::kCobbDouglas);
  std::vector<double> lambda{1.0, 0.5};
  SurplusPlan p = solve_surplus_plan(s, lambda, Matrix::Zero(1, 2), Matrix::Constant(1, 2, 4.0));
  ASSERT_GT(p.production(0, 0), 0.0);
  EXPECT_NEAR(p.tau(0, 0), 50.0, 1e-9);
  EXPECT_NEAR(p.meroi(0, 0), 2.0, 1e-9);
  EXPECT_EQ(p.production(0, 1), 0.0);
}

TEST(Surplus, SinglePeriodIsDegenerate) {
  EconomyScenario s = farm(1, TechForm::kCobbDouglas);
  std::vector<double> lambda{1.0};
  SurplusPlan p = solve_surplus_plan(s, lambda, Matrix::Zero(1, 1), Matrix::Constant(1, 1, 4.0));
  EXPECT_EQ(p.status, Status::kDegenerateHorizon);
  EXPECT_EQ(p.production(0, 0), 0.0);
}

// Linear technology, T = 3: the plan's discounted surplus matches a grid
// over (Q_1, Q_2), the last period producing nothing.
TEST(Surplus, LinearPlanMatchesGridOracle) {
  EconomyScenario s = farm(3, TechForm::kLinear);
  std::vector<double> lambda{1.0, 0.4, 0.05};
  Matrix phi(1, 3);
  phi << 2.0, 1.0, 0.0;
  Matrix cap(1, 3);
  cap << 4.0, 3.0, 3.0;
  SurplusPlan p = solve_surplus_plan(s, lambda, phi, cap);
  auto value = [&](int t, double q) {
    double x = q / 0.5;
    return lambda[static_cast<std::size_t>(t) + 1] / lambda[static_cast<std::size_t>(t)] * 100.0 * q - (10.0 + phi(0, t)) * x;
  };
  double plan_value = value(0, p.production(0, 0)) + value(1, p.production(0, 1));

  numerics::GridOracleRequest req;
  req.resolution = 200;
  req.lower = {0.0, 0.0};
  req.upper = {2.0, 1.5};  // a * capacity
  req.objective = [&](std::span<const double> q) { return value(0, q[0]) + value(1, q[1]); };
  numerics::GridOracleResult g = numerics::grid_oracle(req);
  EXPECT_NEAR(plan_value / g.value, 1.0, 1e-3);
  EXPECT_GE(plan_value, g.value - 1e-9);
  EXPECT_NEAR(p.production(0, 0), 2.0, 1e-6);  // 40 q - 24 q > 0: run at capacity
  EXPECT_NEAR(p.production(0, 1), 0.0, 1e-6);  // 12.5 q - 22 q < 0: idle
}

TEST(ScarcityCost, DiscountedMarginalSurplus) {
  EconomyScenario s = farm(2, TechForm::kCobbDouglas);
  Matrix f = Matrix::Constant(1, 1, 0.5);
  EXPECT_NEAR(power_scarcity_cost(s, 0.9, f, {true})[0], 36.0, 1e-12);
}

TEST(ScarcityCost, ZeroAtBreakEven) {
  EconomyScenario s = farm(2, TechForm::kCobbDouglas);
  EXPECT_EQ(power_scarcity_cost(s, 1.0, Matrix::Constant(1, 1, 0.1), {true})[0], 0.0);
}

TEST(ScarcityCost, ClampedBelowBreakEven) {
  EconomyScenario s = farm(2, TechForm::kCobbDouglas);
  EXPECT_EQ(power_scarcity_cost(s, 1.0, Matrix::Constant(1, 1, 0.05), {true})[0], 0.0);
}

TEST(Eroi, Definitions) {
  EroiReport r = eroi_and_discount(100.0, 50.0, 40.0);
  EXPECT_DOUBLE_EQ(r.meroi, 2.0);
  EXPECT_DOUBLE_EQ(r.implied_beta, 0.5);
  EXPECT_DOUBLE_EQ(r.aeroi, 2.5);
  EXPECT_EQ(error_code_of([] { eroi_and_discount(100.0, 0.0, 40.0); }), ErrorCode::kDivisionByZero);
}

TEST(Eroi, TwoEnergyGoodsShareMarginalReturn) {
  AutarkyEquilibrium eq = solve_autarky(village());
  const SurplusPlan& p = eq.surplus_plan;
  for (int t = 0; t + 1 < p.production.cols(); ++t) {
    ASSERT_GT(p.production(0, t), 0.0);
    ASSERT_GT(p.production(1, t), 0.0);
    EXPECT_NEAR(p.meroi(0, t), p.meroi(1, t), 1e-6);
    EXPECT_NEAR(eq.bundle.beta(t, 1) * p.meroi(0, t), 1.0, 1e-6);
  }
}

TEST(Endowment, GeometricDecay) {
  std::vector<double> none{0.0, 0.0};
  auto x = endowment_path(none, 10.0, 0.9, 3);
  EXPECT_DOUBLE_EQ(x[0], 10.0);
  EXPECT_DOUBLE_EQ(x[1], 9.0);
  EXPECT_NEAR(x[2], 8.1, 1e-14);
}

TEST(Endowment, ProductionAddsNextPeriod) {
  std::vector<double> q{5.0, 0.0};
  auto x = endowment_path(q, 10.0, 0.9, 3);
  EXPECT_DOUBLE_EQ(x[1], 5.0 + 9.0);
}

TEST(Endowment, ConstantProductionSumsGeometricSeries) {
  const double c = 2.0, d = 0.7;
  std::vector<double> q(6, c);
  auto x = endowment_path(q, 0.0, d, 7);
  for (int t = 1; t <= 6; ++t) {
    EXPECT_NEAR(x[static_cast<std::size_t>(t)], c * (1.0 - std::pow(d, t)) / (1.0 - d), 1e-12);
  }
}

TEST(Capital, SingleFuturePeriod) {
  EconomyScenario s = farm(2, TechForm::kCobbDouglas);
  Matrix beta(2, 2);
  beta << 1.0, 0.5, 1.0, 0.0;
  Matrix phi(1, 2);
  phi << 0.0, 20.0;
  Matrix v = lifetime_values(s, beta, phi);
  EXPECT_DOUBLE_EQ(v(0, 0), 10.0);
  EXPECT_DOUBLE_EQ(v(0, 1), 0.0);
}

TEST(Capital, NoScarcityNoAccumulation) {
  EconomyScenario s = farm(3, TechForm::kCobbDouglas);
  s.technologies.push_back(cobb_douglas("worker", 0.5, {0.6}));
  std::vector<double> lambda{1.0, 0.9, 0.8};
  CapitalPlan p = solve_capital_plan(s, lambda, Matrix::Zero(1, 3), Matrix::Constant(1, 3, 4.0));
  EXPECT_EQ(p.tau.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT(p.production.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Capital, AggregatePower) {
  EconomyScenario s = farm(1, TechForm::kCobbDouglas);
  s.prime_movers[0].power_rate = 100.0;
  s.prime_movers.push_back({"engine", 6.0, 50.0, 0.8, 4.0, 80.0});
  Matrix x(2, 1);
  x << 2.0, 4.0;
  EXPECT_DOUBLE_EQ(aggregate_power(s, x)[0], 400.0);
}

TEST(Capital, FisherIdentityAtEquilibrium) {
  AutarkyEquilibrium eq = solve_autarky(village());
  EXPECT_LT(eq.diagnostics.fisher_gap, 1e-8);
  EXPECT_LT(eq.diagnostics.capital_stationarity, 1e-6);
}

}  // namespace
