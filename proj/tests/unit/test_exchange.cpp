#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "energyecon/exchange.hpp"
#include "fixtures.hpp"

namespace {

using namespace energyecon;
using energyecon::testing::error_code_of;

MarketPosition constant(const std::string& good, double level) { return {MetcCurve::constant(good, level), 5.0, 0.0}; }

MarketPosition linear_at(const std::string& good, double intercept, double slope, double autarky) {
  return {MetcCurve::linear(good, intercept, slope), autarky, 0.0};
}

// tau(Q) = Q for bread in both agents, autarkic output 1 and 3: exporting q
// moves the transfers to 1 + q and 3 - q. Cloth mirrors it at twice the slope.
BilateralMarket mirrored_linear() {
  BilateralMarket m;
  m.b = {linear_at("bread", 0.0, 1.0, 1.0), linear_at("bread", 0.0, 1.0, 3.0)};
  m.c = {linear_at("cloth", 0.0, 2.0, 3.0), linear_at("cloth", 0.0, 2.0, 1.0)};
  return m;
}

TEST(GainsFromTrade, ConstantCurvesAreRectangles) {
  BilateralMarket m;
  m.b = {constant("bread", 1.0), constant("bread", 3.0)};
  m.c = {constant("cloth", 4.0), constant("cloth", 2.0)};
  EXPECT_DOUBLE_EQ(gains_from_trade(m, 2.0, 1.0, 0.0), 6.0);
  EXPECT_DOUBLE_EQ(gains_from_trade(m, 2.0, 1.0, 7.0), -1.0);
}

TEST(GainsFromTrade, LinearCurvesMatchTrapezoids) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int i = 0; i < 20; ++i) {
    const double a1 = u(rng), s1 = u(rng), a2 = u(rng) + 2.0, s2 = u(rng), q1 = u(rng) + 1.0, q2 = u(rng) + 3.0;
    const double x = 0.5 * u(rng);
    MarketPosition one = linear_at("bread", a1, s1, q1), two = linear_at("bread", a2, s2, q2);
    // Importer saves the trapezoid under its curve on [q2 - x, q2]; the
    // exporter spends the one on [q1, q1 + x].
    auto area = [](double a, double s, double lo, double hi) { return 0.5 * ((a + s * lo) + (a + s * hi)) * (hi - lo); };
    const double expected = area(a2, s2, q2 - x, q2) - area(a1, s1, q1, q1 + x);
    EXPECT_NEAR(trade_gain(one, two, x), expected, 1e-9);
  }
}

TEST(GainsFromTrade, SampledCurveIntegratesExactly) {
  MetcCurve c = MetcCurve::sampled("bread", {0.0, 1.0, 3.0}, {1.0, 2.0, 6.0});
  EXPECT_NEAR(c.integral(0.0, 3.0), 1.5 + 8.0, 1e-12);
  EXPECT_NEAR(c(4.0), 8.0, 1e-12);  // extrapolates the last segment
}

TEST(MetcCurve, RejectsDecreasingShapes) {
  EXPECT_EQ(error_code_of([] { MetcCurve::linear("bread", 3.0, -1.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { MetcCurve::sampled("bread", {0.0, 1.0}, {2.0, 1.0}); }), ErrorCode::kInvalidArgument);
}

TEST(BilateralTrade, LinearCurvesEqualizeAtTwo) {
  TradeOutcome t = optimal_bilateral_trade(mirrored_linear());
  ASSERT_EQ(t.status, Status::kOk);
  EXPECT_EQ(t.b.exporter, 0);
  EXPECT_NEAR(t.b.quantity, 1.0, 1e-9);
  EXPECT_NEAR(t.b.post_transfer[0], 2.0, 1e-9);
  EXPECT_NEAR(t.b.post_transfer[1], 2.0, 1e-9);
  EXPECT_EQ(t.c.exporter, 1);
  EXPECT_NEAR(t.c.post_transfer[0], 4.0, 1e-9);
  EXPECT_NEAR(t.commodity_price, 2.0, 1e-9);
  EXPECT_TRUE(t.within_reservation);
  EXPECT_GE(t.commodity_price, std::min(t.reservation[0], t.reservation[1]));
  EXPECT_LE(t.commodity_price, std::max(t.reservation[0], t.reservation[1]));
  // Two triangles: bread 1 * 1 / 2 ... twice, cloth 2 * 1 / 2 twice.
  EXPECT_NEAR(t.gains, 1.0 + 2.0, 1e-9);
}

TEST(BilateralTrade, TransactionCostLeavesAWedge) {
  TradeOutcome t = optimal_bilateral_trade(mirrored_linear(), {0.5, 0.5});
  ASSERT_EQ(t.status, Status::kOk);
  EXPECT_NEAR(t.b.post_transfer[1] - t.b.post_transfer[0], 0.5, 1e-9);
  EXPECT_NEAR(t.b.quantity, 0.75, 1e-9);
  EXPECT_GE(t.gains, 0.0);
}

TEST(BilateralTrade, IdenticalAgentsDoNotTrade) {
  BilateralMarket m;
  m.b = {linear_at("bread", 1.0, 0.5, 2.0), linear_at("bread", 1.0, 0.5, 2.0)};
  m.c = {linear_at("cloth", 2.0, 1.5, 1.0), linear_at("cloth", 2.0, 1.5, 1.0)};
  TradeOutcome t = optimal_bilateral_trade(m);
  EXPECT_EQ(t.status, Status::kNoGainsFromTrade);
  EXPECT_EQ(t.b.quantity, 0.0);
  EXPECT_EQ(t.c.quantity, 0.0);
  EXPECT_EQ(t.gains, 0.0);
}

// Agent 1 is the cheaper producer of bread and agent 2 of cloth, and
// outputs are large enough that nobody is driven to zero.
TEST(BilateralTrade, GainsNeverNegative) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> slope(0.1, 0.5), level(0.5, 3.0), gap(0.0, 3.0), output(5.0, 10.0);
  for (int i = 0; i < 50; ++i) {
    const double tb = level(rng), tc = level(rng), db = gap(rng), dc = gap(rng);
    const double sb1 = slope(rng), sb2 = slope(rng), sc1 = slope(rng), sc2 = slope(rng);
    const double qb1 = output(rng), qb2 = output(rng), qc1 = output(rng), qc2 = output(rng);
    BilateralMarket m;
    m.b = {linear_at("bread", tb - sb1 * qb1, sb1, qb1), linear_at("bread", tb + db - sb2 * qb2, sb2, qb2)};
    m.c = {linear_at("cloth", tc + dc - sc1 * qc1, sc1, qc1), linear_at("cloth", tc - sc2 * qc2, sc2, qc2)};
    if (m.b[0].curve(0.0) < 0.0 || m.b[1].curve(0.0) < 0.0 || m.c[0].curve(0.0) < 0.0 || m.c[1].curve(0.0) < 0.0) continue;
    TradeOutcome t = optimal_bilateral_trade(m);
    EXPECT_GE(t.gains, -1e-12);
    EXPECT_TRUE(t.within_reservation);
    for (const GoodTrade* g : {&t.b, &t.c}) {
      if (g->exporter < 0) continue;
      EXPECT_NEAR(g->post_transfer[0], g->post_transfer[1], 1e-6 * std::max(1.0, g->post_transfer[0]));
    }
  }
}

TEST(Tatonnement, TwoAgentsReproduceBilateral) {
  BilateralMarket m = mirrored_linear();
  TradeOutcome bilateral = optimal_bilateral_trade(m);
  TatonnementResult r = multi_agent_tatonnement({{m.b[0], m.c[0]}, {m.b[1], m.c[1]}});
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_NEAR(r.goods[0].level, bilateral.b.post_transfer[0], 1e-6);
  EXPECT_NEAR(r.goods[1].level, bilateral.c.post_transfer[0], 1e-6);
  EXPECT_NEAR(r.goods[0].net_exports[0], bilateral.b.quantity, 1e-6);
  EXPECT_NEAR(r.goods[1].net_exports[1], bilateral.c.quantity, 1e-6);
  EXPECT_NEAR(r.commodity_prices(0, 1), bilateral.commodity_price, 1e-6);
}

TEST(Tatonnement, IdenticalAgentsDoNotTrade) {
  std::vector<MarketPosition> one{linear_at("bread", 1.0, 0.5, 2.0), linear_at("cloth", 2.0, 1.5, 1.0)};
  TatonnementResult r = multi_agent_tatonnement(std::vector<std::vector<MarketPosition>>(5, one));
  ASSERT_EQ(r.status, Status::kOk);
  for (const auto& g : r.goods) {
    for (double x : g.net_exports) EXPECT_EQ(x, 0.0);
  }
  for (double e : r.energy_released) EXPECT_EQ(e, 0.0);
}

TEST(Tatonnement, ThreeLinearAgentsMeetAtAggregateIntersection) {
  const double a[] = {1.0, 2.0, 3.0}, s[] = {1.0, 0.5, 2.0}, c[] = {2.0, 1.5, 1.0};
  std::vector<std::vector<MarketPosition>> agents;
  double inv = 0.0, num = 0.0;
  for (int i = 0; i < 3; ++i) {
    agents.push_back({linear_at("bread", a[i], s[i], c[i])});
    inv += 1.0 / s[i];
    num += c[i] + a[i] / s[i];
  }
  // Supply (L - a_i) / s_i summed against fixed consumption sum c_i.
  const double level = num / inv;
  TatonnementResult r = multi_agent_tatonnement(agents);
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_NEAR(r.goods[0].level, level, 1e-7);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.goods[0].production[static_cast<std::size_t>(i)], (level - a[i]) / s[i], 1e-6);
    total += r.goods[0].net_exports[static_cast<std::size_t>(i)];
  }
  EXPECT_NEAR(total, 0.0, 1e-13);
  EXPECT_LT(r.goods[0].spread, 1e-6);
}

// Agent 2's first unit costs more than agent 1 pays at total demand, so
// agent 1 supplies everything and the level is its transfer there.
TEST(Tatonnement, ImporterCornerSettlesAtMarginalProducer) {
  std::vector<std::vector<MarketPosition>> agents{{linear_at("cloth", 1.0, 0.2, 5.0)},
                                                  {linear_at("cloth", 4.0, 0.5, 5.0)}};
  TatonnementResult r = multi_agent_tatonnement(agents);
  ASSERT_EQ(r.status, Status::kOk);
  EXPECT_NEAR(r.goods[0].production[0], 10.0, 1e-7);
  EXPECT_EQ(r.goods[0].production[1], 0.0);
  EXPECT_NEAR(r.goods[0].level, 3.0, 1e-7);
  EXPECT_LT(r.goods[0].spread, 1e-8);
}

TEST(Tatonnement, RaggedInputIsRejected) {
  std::vector<std::vector<MarketPosition>> agents{{linear_at("bread", 1.0, 1.0, 1.0)}, {}};
  EXPECT_EQ(error_code_of([&] { multi_agent_tatonnement(agents); }), ErrorCode::kInvalidArgument);
}

TEST(SampleMetc, CurveFromSolvedAgentIsMonotone) {
  AutarkyEquilibrium eq = solve_autarky(energyecon::testing::village());
  MetcCurve c = sample_metc(eq, "bread", 0);
  ASSERT_GE(c.quantities().size(), 2u);
  for (std::size_t i = 1; i < c.transfers().size(); ++i) {
    EXPECT_GT(c.quantities()[i], c.quantities()[i - 1]);
    EXPECT_GE(c.transfers()[i], c.transfers()[i - 1] - 1e-9 * c.transfers()[i - 1]);
  }
}

}  // namespace
