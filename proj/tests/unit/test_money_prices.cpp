#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "energyecon/money_prices.hpp"
#include "fixtures.hpp"

namespace {

using namespace energyecon;
using namespace energyecon::testing;

MoneyState money(double real_transfer, double real_quantity, double nominal_quantity) {
  return {"bread", real_transfer, real_quantity, nominal_quantity, false};
}

TEST(PriceTable, RealAndNominalPrices) {
  std::vector<std::string> goods{"cloth"};
  std::vector<double> tau{20.0};
  PriceTable p = price_table(goods, tau, money(10.0, 100.0, 1000.0));
  EXPECT_DOUBLE_EQ(p.synthetic_transfer, 1.0);
  EXPECT_DOUBLE_EQ(p.rows[0].real_price, 2.0);
  EXPECT_DOUBLE_EQ(p.rows[0].nominal_price, 20.0);
}

TEST(PriceTable, DoublingNominalMoneyDoublesPricesOnly) {
  std::vector<std::string> goods{"bread", "cloth", "tools"};
  std::vector<double> tau{3.7, 11.2, 0.9};
  PriceTable base = price_table(goods, tau, money(10.0, 100.0, 1000.0));
  PriceTable more = price_table(goods, tau, money(10.0, 100.0, 2000.0));
  for (std::size_t k = 0; k < goods.size(); ++k) {
    EXPECT_DOUBLE_EQ(more.rows[k].nominal_price, 2.0 * base.rows[k].nominal_price);
    EXPECT_EQ(more.rows[k].real_price, base.rows[k].real_price);
  }
  EXPECT_NEAR(more.relative_nominal("cloth", "tools"), base.relative_nominal("cloth", "tools"), 1e-14 * 12.5);
  EXPECT_EQ(error_code_of([&] { base.relative_nominal("cloth", "gold"); }), ErrorCode::kInvalidArgument);
}

TEST(PriceTable, FiatMoneyHasNoSyntheticTransfer) {
  MoneyState m = money(10.0, 100.0, 1000.0);
  m.fiat = true;
  EXPECT_EQ(error_code_of([&] { m.synthetic_transfer(); }), ErrorCode::kFiatMoney);
}

TEST(Inflation, NominalGrowthOfTenPercent) {
  std::vector<MoneyState> path{money(10.0, 100.0, 1000.0), money(10.0, 100.0, 1100.0)};
  Matrix tau(1, 2);
  tau << 5.0, 5.0;
  PriceDynamics d = inflation_and_dynamics(path, tau);
  ASSERT_EQ(d.inflation.size(), 1u);
  EXPECT_NEAR(d.inflation[0], std::log(1.1), 1e-15);
  EXPECT_NEAR(d.dln_nominal(0, 0), std::log(1.1), 1e-15);
  EXPECT_LE(d.identity_residual, 1e-12);
}

TEST(Inflation, ConstantPathsAreStable) {
  std::vector<MoneyState> path(3, money(10.0, 100.0, 1000.0));
  Matrix tau = Matrix::Constant(2, 3, 4.0);
  PriceDynamics d = inflation_and_dynamics(path, tau);
  for (double pi : d.inflation) EXPECT_EQ(pi, 0.0);
  EXPECT_EQ(d.dln_nominal.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Inflation, CheaperMoneyGoodRaisesPrices) {
  std::vector<MoneyState> path{money(10.0, 100.0, 1000.0), money(9.5, 100.0, 1000.0)};
  Matrix tau = Matrix::Constant(1, 2, 4.0);
  PriceDynamics d = inflation_and_dynamics(path, tau);
  EXPECT_NEAR(d.inflation[0], -std::log(0.95), 1e-15);
  EXPECT_GT(d.inflation[0], 0.0);
}

TEST(Inflation, DecompositionHoldsOnRandomPaths) {
  std::vector<MoneyState> path;
  Matrix tau(3, 6);
  for (int t = 0; t < 6; ++t) {
    path.push_back(money(10.0 + std::sin(t), 100.0 + 7.0 * t, 1000.0 * std::exp(0.03 * t)));
    for (int k = 0; k < 3; ++k) tau(k, t) = 1.0 + k + 0.3 * std::cos(t + k);
  }
  PriceDynamics d = inflation_and_dynamics(path, tau);
  EXPECT_LE(d.identity_residual, 1e-12);
  for (int t = 0; t < 5; ++t) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(d.dln_nominal(k, t) - d.dln_real(k, t), d.dln_money_ratio[static_cast<std::size_t>(t)], 1e-12);
    }
  }
}

TEST(Embodied, AmortizationIsBuildEnergyOverService) {
  EXPECT_DOUBLE_EQ(amortized_build_energy(100.0, 50.0), 2.0);
  EXPECT_EQ(error_code_of([] { amortized_build_energy(100.0, 0.0); }), ErrorCode::kDivisionByZero);
}

TEST(Embodied, GapRowsSubstitute) {
  std::vector<std::string> goods{"bread", "cloth"};
  // psi 5, theta 2, overhead 3: tau 7, gamma 8, gap -1.
  std::vector<double> tau{7.0, 4.0}, gamma{8.0, 4.0}, theta{2.0, 1.5}, overhead{3.0, 1.5};
  std::vector<GapRow> rows = transfer_embodied_gap(goods, tau, gamma, theta, overhead);
  EXPECT_DOUBLE_EQ(rows[0].gap, -1.0);
  EXPECT_DOUBLE_EQ(rows[0].residual, 0.0);
  EXPECT_DOUBLE_EQ(rows[1].gap, 0.0);  // theta = overhead leaves tau = gamma
  EXPECT_DOUBLE_EQ(rows[1].tau, rows[1].gamma);
}

// One period, each worker built with 5 J and serving for that single
// period: 5 J per unit-period, 2.5 J per loaf at two loaves per worker.
TEST(Embodied, SinglePeriodOverhead) {
  EconomyScenario s = bare(1);
  s.prime_movers.push_back({"worker", 10.0, 10.0, 0.9, 100.0, 5.0});
  s.energy_goods.push_back({"grain", 100.0, 1.0});
  s.final_goods.push_back({"bread", {1.0}});
  s.technologies.push_back(linear("bread", 2.0, {1.0}));
  s.technologies.push_back(linear("grain", 1.0, {1.0}));
  AutarkyEquilibrium eq = solve_autarky(s);
  Matrix build;
  Matrix overhead = service_overhead(s, eq.bundle, &build);
  EXPECT_NEAR(overhead(0, 0), 5.0, 1e-12);
  EXPECT_NEAR(build(0, 0), 5.0, 1e-12);
  EmbodiedAccount acc = embodied_energy(s, eq.bundle, eq.decomposition);
  const auto bread = static_cast<Eigen::Index>(*s.find_good("bread"));
  EXPECT_NEAR(acc.overhead(bread, 0), 2.5, 1e-9);
  EXPECT_NEAR(acc.gamma(bread, 0), acc.psi(bread, 0) + 2.5, 1e-9);
}

TEST(Embodied, MissingBuildEnergyIsReported) {
  EconomyScenario s = village();
  s.prime_movers[0].build_energy.reset();
  AutarkyEquilibrium eq = solve_autarky(s);
  EXPECT_EQ(error_code_of([&] { service_overhead(s, eq.bundle); }), ErrorCode::kMissingHistory);
}

TEST(Embodied, DefaultScenarioAccountsAreConsistent) {
  EconomyScenario s = village();
  AutarkyEquilibrium eq = solve_autarky(s);
  EmbodiedAccount acc = embodied_energy(s, eq.bundle, eq.decomposition);
  int produced = 0;
  for (Eigen::Index k = 0; k < acc.gamma.rows(); ++k) {
    for (Eigen::Index t = 0; t < acc.gamma.cols(); ++t) {
      if (!std::isfinite(acc.psi(k, t))) continue;
      ++produced;
      EXPECT_GE(acc.overhead(k, t), 0.0);
      EXPECT_GE(acc.gamma(k, t), acc.psi(k, t));
      const double tau = acc.psi(k, t) + acc.theta(k, t);
      std::vector<std::string> g{acc.goods[static_cast<std::size_t>(k)]};
      std::vector<double> tv{tau}, gv{acc.gamma(k, t)}, th{acc.theta(k, t)}, ov{acc.overhead(k, t)};
      EXPECT_LE(std::abs(transfer_embodied_gap(g, tv, gv, th, ov)[0].residual), 1e-9 * std::max(1.0, tau));
    }
  }
  EXPECT_GT(produced, 0);
  EXPECT_GE(acc.service_overhead.minCoeff(), 0.0);
}

// Builds an account and matching prices where every price obeys the
// identity P = (gamma_avg (1 + eta) + gap) / tau_s exactly.
struct Synthetic {
  PriceTable prices;
  EmbodiedAccount account;
};

Synthetic synthetic(const std::vector<double>& gamma_avg, const std::vector<double>& eta, const std::vector<double>& gap,
                    const MoneyState& m) {
  Synthetic s;
  const auto n = static_cast<Eigen::Index>(gamma_avg.size());
  std::vector<double> tau;
  for (Eigen::Index k = 0; k < n; ++k) {
    s.account.goods.push_back("good" + std::to_string(k));
    const auto i = static_cast<std::size_t>(k);
    tau.push_back(gamma_avg[i] * (1.0 + eta[i]) + gap[i]);
  }
  s.account.gamma_avg = Matrix(n, 1);
  s.account.eta = Matrix(n, 1);
  s.account.theta = Matrix(n, 1);
  s.account.overhead = Matrix::Constant(n, 1, 1.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    s.account.gamma_avg(k, 0) = gamma_avg[i];
    s.account.eta(k, 0) = eta[i];
    s.account.theta(k, 0) = 1.0 + gap[i];
  }
  s.prices = price_table(s.account.goods, tau, m);
  return s;
}

TEST(Proportionality, ZeroGapsGiveExactFit) {
  const MoneyState m = money(10.0, 100.0, 4000.0);  // tau_s = 0.25
  Synthetic s = synthetic({1.0, 2.5, 4.0, 7.5}, {0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}, m);
  ProportionalityReport r = proportionality_report(s.prices, s.account, 0);
  EXPECT_NEAR(r.slope, 1.0 / 0.25, 1e-12);
  EXPECT_NEAR(r.intercept, 0.0, 1e-12);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-14);
  EXPECT_LE(r.max_identity_residual, 1e-15);
}

TEST(Proportionality, GapsAddNoiseButKeepTheIdentity) {
  Synthetic s = synthetic({1.0, 2.5, 4.0, 7.5}, {0.1, -0.2, 0.05, 0.0}, {0.6, -0.4, 1.1, -0.9}, money(10.0, 100.0, 1000.0));
  ProportionalityReport r = proportionality_report(s.prices, s.account, 0);
  EXPECT_LT(r.r_squared, 1.0);
  EXPECT_GT(r.r_squared, 0.0);
  EXPECT_LE(r.max_identity_residual, 1e-12);
  for (const auto& pair : r.pairs) EXPECT_NEAR(pair.predicted_ratio, pair.nominal_ratio, 1e-12 * pair.nominal_ratio);
}

TEST(Proportionality, HigherElasticityRaisesRelativePrice) {
  Synthetic s = synthetic({3.0, 2.0}, {0.4, 0.1}, {0.0, 0.0}, money(10.0, 100.0, 1000.0));
  ProportionalityReport r = proportionality_report(s.prices, s.account, 0);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_GT(r.pairs[0].nominal_ratio, r.pairs[0].embodied_ratio);
}

TEST(Proportionality, DegenerateInputs) {
  const MoneyState m = money(10.0, 100.0, 1000.0);
  Synthetic equal = synthetic({2.0, 2.0, 2.0}, {0.0, 0.1, 0.2}, {0.0, 0.0, 0.0}, m);
  EXPECT_EQ(error_code_of([&] { proportionality_report(equal.prices, equal.account, 0); }), ErrorCode::kDegenerateFit);
  Synthetic one = synthetic({2.0}, {0.0}, {0.0}, m);
  EXPECT_EQ(error_code_of([&] { proportionality_report(one.prices, one.account, 0); }), ErrorCode::kDegenerateFit);
}

TEST(Proportionality, DemoScenarioIsExact) {
  EconomyScenario s = load("proportionality_demo.json");
  AutarkyEquilibrium eq = solve_autarky(s);
  std::vector<MoneyState> path = money_path(s, eq);
  EmbodiedAccount acc = embodied_energy(s, eq.bundle, eq.decomposition);
  std::vector<double> tau;
  for (const auto& g : acc.goods) tau.push_back(eq.bundle.tau(static_cast<Eigen::Index>(*s.find_good(g)), 0));
  PriceTable prices = price_table(acc.goods, tau, path[0]);
  ProportionalityReport r = proportionality_report(prices, acc, 0);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-9);
  EXPECT_NEAR(r.slope * prices.synthetic_transfer, 1.0, 1e-9);
  EXPECT_LE(r.max_identity_residual, 1e-9);
}

TEST(RealMoney, ScenarioChoiceWins) {
  EconomyScenario s = load("proportionality_demo.json");
  AutarkyEquilibrium eq = solve_autarky(s);
  EXPECT_EQ(choose_real_money(s, eq.decomposition), "bread");
  s.money->real_good.clear();
  const std::string chosen = choose_real_money(s, eq.decomposition);
  EXPECT_TRUE(s.find_good(chosen).has_value());
}

}  // namespace
