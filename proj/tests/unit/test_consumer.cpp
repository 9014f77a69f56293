#include <gtest/gtest.h>

#include <cmath>

#include "energyecon/autarky.hpp"
#include "energyecon/consumer.hpp"
#include "fixtures.hpp"

namespace {

using namespace energyecon;
using namespace energyecon::testing;

TEST(Discount, RatioOfMultipliers) {
  std::vector<double> lambda{2.0, 1.0, 0.5};
  Matrix b = discount_factors(lambda);
  EXPECT_DOUBLE_EQ(b(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(b(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(b(0, 2), 0.25);
  EXPECT_DOUBLE_EQ(b(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(b(2, 1), 0.0);  // past the horizon
}

TEST(Discount, ConstantMultiplierMeansNoDiscount) {
  std::vector<double> lambda(4, 0.3);
  Matrix b = discount_factors(lambda);
  for (int t = 0; t < 4; ++t) {
    for (int i = 0; t + i < 4; ++i) EXPECT_DOUBLE_EQ(b(t, i), 1.0);
  }
}

TEST(Discount, RisingMultiplierGivesFactorAboveOne) {
  std::vector<double> lambda{1.0, 2.0};
  EXPECT_DOUBLE_EQ(discount_factors(lambda)(0, 1), 2.0);
}

TEST(Discount, NonPositiveMultiplierIsDomainError) {
  std::vector<double> lambda{1.0, 0.0};
  EXPECT_EQ(error_code_of([&] { discount_factors(lambda); }), ErrorCode::kDomainError);
}

TEST(ConsumerFoc, SatisfiedAndOff) {
  std::vector<double> lambda{2.0};
  EXPECT_DOUBLE_EQ(consumer_foc_residual(Matrix::Constant(1, 1, 5.0), lambda, Matrix::Constant(1, 1, 2.5))(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(consumer_foc_residual(Matrix::Constant(1, 1, 5.0), lambda, Matrix::Constant(1, 1, 3.0))(0, 0), -0.5);
}

TEST(ConsumerFoc, LogUtilityClosedForm) {
  // w ln Q with Q = E / tau: U_f = w tau / E, lambda = w / E.
  const double w = 1.0, e = 100.0, tau = 5.0;
  const double q = e / tau;
  std::vector<double> lambda{w / e};
  EXPECT_NEAR(consumer_foc_residual(Matrix::Constant(1, 1, w / q), lambda, Matrix::Constant(1, 1, tau))(0, 0), 0.0,
              1e-14);
}

TEST(Euler, StationaryEconomy) {
  Matrix u = Matrix::Constant(2, 3, 0.7);
  Matrix tau = Matrix::Constant(2, 3, 4.0);
  std::vector<double> lambda(3, 1.0);
  EXPECT_EQ(max_abs(euler_residual(u, discount_factors(lambda), tau)), 0.0);
}

TEST(Euler, HalvedMarginalUtilityMatchesHalvedDiscount) {
  Matrix u(1, 2);
  u << 2.0, 1.0;
  Matrix tau = Matrix::Constant(1, 2, 3.0);
  std::vector<double> lambda{1.0, 0.5};
  auto r = euler_residual(u, discount_factors(lambda), tau);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].residual, 0.0);
  EXPECT_EQ(r[0].offset, 1);
}

TEST(Euler, DefaultEquilibrium) {
  AutarkyEquilibrium eq = solve_autarky(village());
  EXPECT_LT(eq.diagnostics.euler, 1e-6);
  EXPECT_LT(eq.diagnostics.consumer_foc, 1e-6);
}

}  // namespace
