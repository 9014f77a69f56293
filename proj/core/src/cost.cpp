#include "energyecon/cost.hpp"

#include <cmath>

namespace energyecon {

CostMinimum cost_min(const ProductionTech& tech, std::span<const double> prices, double quantity) {
  const std::size_t n = tech.coefficients.size();
  if (prices.size() != n) throw Error(ErrorCode::kInvalidArgument, "cost_min: price vector has wrong length");
  if (!(quantity >= 0.0)) throw Error(ErrorCode::kDomainError, "cost_min: quantity must be >= 0");
  CostMinimum c;
  c.inputs.assign(n, 0.0);
  c.marginal_shares.assign(n, 0.0);

  if (tech.form == TechForm::kLinear) {
    std::size_t best = n;
    double best_unit = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      double a = tech.coefficients[l];
      if (a <= 0.0) continue;
      double unit = prices[l] / (tech.scale * a);
      if (best == n || unit < best_unit * (1.0 - 1e-12)) {
        best = l;
        best_unit = unit;
      }
    }
    if (best == n) throw Error(ErrorCode::kInvalidArgument, "cost_min: technology has no productive input");
    c.inputs[best] = quantity / (tech.scale * tech.coefficients[best]);
    c.cost = best_unit * quantity;
    c.marginal_cost = best_unit;
    c.marginal_shares[best] = 1.0;
    return c;
  }

  const double s = tech.returns_to_scale();
  // Unit-scale cost: C(1) = s * A^{-1/s} * prod (w_l/a_l)^{a_l/s}.
  double log_unit = std::log(s) - std::log(tech.scale) / s;
  for (std::size_t l = 0; l < n; ++l) {
    double a = tech.coefficients[l];
    if (a <= 0.0) continue;
    if (!(prices[l] > 0.0)) throw Error(ErrorCode::kDomainError, "cost_min: input prices must be > 0");
    log_unit += (a / s) * std::log(prices[l] / a);
    c.marginal_shares[l] = a / s;
  }
  const double unit_cost = std::exp(log_unit);
  if (quantity == 0.0) {
    c.marginal_cost = s < 1.0 ? 0.0 : unit_cost / s;
    return c;
  }
  c.cost = unit_cost * std::pow(quantity, 1.0 / s);
  c.marginal_cost = c.cost / (s * quantity);
  for (std::size_t l = 0; l < n; ++l) {
    double a = tech.coefficients[l];
    if (a > 0.0) c.inputs[l] = a * c.cost / (s * prices[l]);
  }
  return c;
}

}  // namespace energyecon
