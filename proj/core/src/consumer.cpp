#include "energyecon/consumer.hpp"

#include <algorithm>
#include <cmath>

namespace energyecon {

Matrix discount_factors(std::span<const double> lambda) {
  const auto T = static_cast<Eigen::Index>(lambda.size());
  Matrix beta = Matrix::Zero(T, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!(lambda[static_cast<std::size_t>(t)] > 0.0)) {
      throw Error(ErrorCode::kDomainError, "discount_factors: lambda must be > 0");
    }
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; t + i < T; ++i) {
      beta(t, i) = lambda[static_cast<std::size_t>(t + i)] / lambda[static_cast<std::size_t>(t)];
    }
  }
  return beta;
}

Matrix consumer_foc_residual(const Matrix& marginals, std::span<const double> lambda, const Matrix& tau) {
  if (marginals.rows() != tau.rows() || marginals.cols() != tau.cols() ||
      static_cast<std::size_t>(tau.cols()) != lambda.size()) {
    throw Error(ErrorCode::kInvalidArgument, "consumer_foc_residual: shapes do not match");
  }
  Matrix r(tau.rows(), tau.cols());
  for (Eigen::Index t = 0; t < tau.cols(); ++t) {
    double lam = lambda[static_cast<std::size_t>(t)];
    if (!(lam > 0.0)) throw Error(ErrorCode::kDomainError, "consumer_foc_residual: lambda must be > 0");
    for (Eigen::Index f = 0; f < tau.rows(); ++f) r(f, t) = marginals(f, t) / lam - tau(f, t);
  }
  return r;
}

std::vector<EulerResidual> euler_residual(const Matrix& marginals, const Matrix& beta, const Matrix& tau) {
  std::vector<EulerResidual> out;
  const Eigen::Index T = tau.cols();
  for (Eigen::Index f = 0; f < tau.rows(); ++f) {
    for (Eigen::Index t = 0; t < T; ++t) {
      if (!(marginals(f, t) > 0.0) || !(tau(f, t) > 0.0)) continue;
      for (Eigen::Index i = 1; t + i < T; ++i) {
        if (!(marginals(f, t + i) > 0.0)) continue;
        double r = marginals(f, t + i) / marginals(f, t) - beta(t, i) * tau(f, t + i) / tau(f, t);
        out.push_back({static_cast<std::size_t>(f), static_cast<int>(t), static_cast<int>(i), r});
      }
    }
  }
  return out;
}

double max_abs(const std::vector<EulerResidual>& residuals) {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, std::abs(r.residual));
  return m;
}

}  // namespace energyecon
