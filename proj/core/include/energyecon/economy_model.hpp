#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "energyecon/numerics.hpp"

namespace energyecon {

using numerics::Matrix;
using numerics::Vector;

struct PrimeMoverSpec {
  std::string id;
  double epsilon = 0.0;      // J per unit-period
  double power_rate = 0.0;   // W
  double depreciation = 0.0; // survival factor per period
  double initial_endowment = 0.0;
  // J spent building one unit of the initial endowment. Needed only for
  // embodied-energy accounting.
  std::optional<double> build_energy;
};

struct EnergyGoodSpec {
  std::string id;
  double energy_content = 0.0;  // J per unit
  double initial_stock = 0.0;
};

struct FinalGoodSpec {
  std::string id;
  std::vector<double> weights;  // one per period
};

enum class TechForm { kLinear, kCobbDouglas };

// One technology per good. `coefficients` is aligned with the scenario's
// prime-mover order.
struct ProductionTech {
  std::string good;
  TechForm form = TechForm::kCobbDouglas;
  double scale = 1.0;
  std::vector<double> coefficients;

  double returns_to_scale() const;  // sum of coefficients
};

struct ProductionValue {
  double output = 0.0;
  std::vector<double> marginal_productivities;  // dQ/dx_l
  std::vector<double> marginal_requirements;    // 1/f_l; +inf for inputs with zero coefficient
};

double production_output(const ProductionTech& tech, std::span<const double> inputs);

// Throws Error(kNonFiniteMarginal) when an input with a positive coefficient
// has a zero or infinite marginal productivity (CobbDouglas at a boundary).
ProductionValue eval_production(const ProductionTech& tech, std::span<const double> inputs);

// Hessian of the output with respect to the inputs (interior points only).
Matrix production_hessian(const ProductionTech& tech, std::span<const double> inputs);

enum class UtilityForm { kWeightedLog };

// weights(f, t); energy goods and prime movers never enter utility.
struct UtilityModel {
  UtilityForm form = UtilityForm::kWeightedLog;
  Matrix weights;
};

struct UtilityValue {
  double utility = 0.0;
  Matrix marginals;  // (f, t)
};

// Throws Error(kDomainError) on any Q <= 0 with a positive weight.
UtilityValue eval_utility(const UtilityModel& model, const Matrix& quantities);

struct MoneySpec {
  std::string real_good;  // empty: choose the good with the lowest mu
  double real_quantity = 0.0;     // Q_m
  double nominal_quantity = 0.0;  // Q_n
  bool fiat = false;
};

struct EconomyScenario {
  std::string name;
  int horizon = 1;
  std::vector<PrimeMoverSpec> prime_movers;
  std::vector<EnergyGoodSpec> energy_goods;
  std::vector<FinalGoodSpec> final_goods;
  std::vector<ProductionTech> technologies;
  std::optional<MoneySpec> money;
  numerics::SolverSettings solver;

  std::size_t num_prime_movers() const { return prime_movers.size(); }
  std::size_t num_energy_goods() const { return energy_goods.size(); }
  std::size_t num_final_goods() const { return final_goods.size(); }

  // Goods are indexed as finals, then energy goods, then prime movers.
  std::size_t num_goods() const;
  std::size_t final_index(std::size_t f) const { return f; }
  std::size_t energy_index(std::size_t e) const { return num_final_goods() + e; }
  std::size_t prime_mover_good_index(std::size_t l) const {
    return num_final_goods() + num_energy_goods() + l;
  }
  std::vector<std::string> good_ids() const;
  std::optional<std::size_t> find_good(const std::string& id) const;

  const ProductionTech* technology_for(const std::string& good) const;
  std::vector<double> epsilon() const;
  UtilityModel utility() const;
};

struct Violation {
  std::string field;
  std::string rule;
};

std::vector<Violation> validate_scenario(const EconomyScenario& scenario);

}  // namespace energyecon
