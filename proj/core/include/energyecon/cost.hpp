#pragma once

#include <span>
#include <vector>

#include "energyecon/economy_model.hpp"

namespace energyecon {

// Cost-minimizing input bundle for a single technology at fixed input prices
// (J per prime-mover unit, normally epsilon + phi).
struct CostMinimum {
  std::vector<double> inputs;
  double cost = 0.0;
  double marginal_cost = 0.0;
  // Marginal input shares f_l * dx_l/dQ along the expansion path; they sum
  // to one and weight the per-input marginal requirements.
  std::vector<double> marginal_shares;
};

// Closed form. Linear technologies use the cheapest input, ties resolved
// towards the lowest prime-mover index.
CostMinimum cost_min(const ProductionTech& tech, std::span<const double> prices, double quantity);

}  // namespace energyecon
