#pragma once

#include <span>
#include <vector>

#include "energyecon/numerics.hpp"

namespace energyecon {

using numerics::Matrix;

// beta(t, i) = lambda_{t+i} / lambda_t for i = 0..T-1-t; zero past the
// horizon. Throws Error(kDomainError) unless every lambda is > 0.
Matrix discount_factors(std::span<const double> lambda);

// U_{f,t} / lambda_t - tau_{f,t}.
Matrix consumer_foc_residual(const Matrix& utility_marginals, std::span<const double> lambda, const Matrix& tau);

struct EulerResidual {
  std::size_t good = 0;
  int period = 0;
  int offset = 0;
  double residual = 0.0;
};

// U_{f,t+i}/U_{f,t} - beta_{t,i} tau_{f,t+i}/tau_{f,t} for i >= 1, over
// goods with positive marginal utility in both periods.
std::vector<EulerResidual> euler_residual(const Matrix& utility_marginals, const Matrix& beta, const Matrix& tau);

double max_abs(const std::vector<EulerResidual>& residuals);

}  // namespace energyecon
