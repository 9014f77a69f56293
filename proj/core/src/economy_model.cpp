#include "energyecon/economy_model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace energyecon {

double ProductionTech::returns_to_scale() const {
  return std::accumulate(coefficients.begin(), coefficients.end(), 0.0);
}

double production_output(const ProductionTech& tech, std::span<const double> inputs) {
  if (inputs.size() != tech.coefficients.size()) {
    throw Error(ErrorCode::kInvalidArgument, "production: input vector has wrong length for " + tech.good);
  }
  if (tech.form == TechForm::kLinear) {
    double sum = 0.0;
    for (std::size_t l = 0; l < inputs.size(); ++l) sum += tech.coefficients[l] * inputs[l];
    return tech.scale * sum;
  }
  double log_out = std::log(tech.scale);
  for (std::size_t l = 0; l < inputs.size(); ++l) {
    double a = tech.coefficients[l];
    if (a == 0.0) continue;
    if (inputs[l] <= 0.0) return 0.0;
    log_out += a * std::log(inputs[l]);
  }
  return std::exp(log_out);
}

ProductionValue eval_production(const ProductionTech& tech, std::span<const double> inputs) {
  ProductionValue v;
  v.output = production_output(tech, inputs);
  const std::size_t n = inputs.size();
  v.marginal_productivities.assign(n, 0.0);
  v.marginal_requirements.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t l = 0; l < n; ++l) {
    double a = tech.coefficients[l];
    if (a == 0.0) continue;
    double m = 0.0;
    if (tech.form == TechForm::kLinear) {
      m = tech.scale * a;
    } else if (inputs[l] > 0.0) {
      m = a * v.output / inputs[l];
    } else {
      m = v.output > 0.0 || a < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (!std::isfinite(m) || m <= 0.0) {
      throw Error(ErrorCode::kNonFiniteMarginal,
                  "eval_production: marginal requirement undefined for input " + std::to_string(l) +
                      " of " + tech.good);
    }
    v.marginal_productivities[l] = m;
    v.marginal_requirements[l] = 1.0 / m;
  }
  return v;
}

Matrix production_hessian(const ProductionTech& tech, std::span<const double> inputs) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Matrix h = Matrix::Zero(n, n);
  if (tech.form == TechForm::kLinear) return h;
  double q = production_output(tech, inputs);
  for (Eigen::Index i = 0; i < n; ++i) {
    double ai = tech.coefficients[i];
    if (ai == 0.0) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      double aj = tech.coefficients[j];
      if (aj == 0.0) continue;
      h(i, j) = q * ai * aj / (inputs[i] * inputs[j]);
    }
    h(i, i) -= q * ai / (inputs[i] * inputs[i]);
  }
  return h;
}

UtilityValue eval_utility(const UtilityModel& model, const Matrix& quantities) {
  if (quantities.rows() != model.weights.rows() || quantities.cols() != model.weights.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "eval_utility: quantity matrix shape mismatch");
  }
  UtilityValue v;
  v.marginals = Matrix::Zero(quantities.rows(), quantities.cols());
  for (Eigen::Index f = 0; f < quantities.rows(); ++f) {
    for (Eigen::Index t = 0; t < quantities.cols(); ++t) {
      double w = model.weights(f, t);
      double q = quantities(f, t);
      if (w == 0.0) continue;
      if (!(q > 0.0)) {
        throw Error(ErrorCode::kDomainError, "eval_utility: log utility undefined at Q <= 0");
      }
      v.utility += w * std::log(q);
      v.marginals(f, t) = w / q;
    }
  }
  return v;
}

std::size_t EconomyScenario::num_goods() const {
  return num_final_goods() + num_energy_goods() + num_prime_movers();
}

std::vector<std::string> EconomyScenario::good_ids() const {
  std::vector<std::string> ids;
  ids.reserve(num_goods());
  for (const auto& f : final_goods) ids.push_back(f.id);
  for (const auto& e : energy_goods) ids.push_back(e.id);
  for (const auto& l : prime_movers) ids.push_back(l.id);
  return ids;
}

std::optional<std::size_t> EconomyScenario::find_good(const std::string& id) const {
  auto ids = good_ids();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] == id) return k;
  }
  return std::nullopt;
}

const ProductionTech* EconomyScenario::technology_for(const std::string& good) const {
  for (const auto& tech : technologies) {
    if (tech.good == good) return &tech;
  }
  return nullptr;
}

std::vector<double> EconomyScenario::epsilon() const {
  std::vector<double> eps;
  eps.reserve(prime_movers.size());
  for (const auto& pm : prime_movers) eps.push_back(pm.epsilon);
  return eps;
}

UtilityModel EconomyScenario::utility() const {
  UtilityModel u;
  u.weights = Matrix::Zero(static_cast<Eigen::Index>(num_final_goods()), horizon);
  for (std::size_t f = 0; f < final_goods.size(); ++f) {
    const auto& w = final_goods[f].weights;
    for (int t = 0; t < horizon && t < static_cast<int>(w.size()); ++t) {
      u.weights(static_cast<Eigen::Index>(f), t) = w[static_cast<std::size_t>(t)];
    }
  }
  return u;
}

std::vector<Violation> validate_scenario(const EconomyScenario& s) {
  std::vector<Violation> out;
  auto add = [&](std::string field, std::string rule) {
    out.push_back({std::move(field), std::move(rule)});
  };

  if (s.horizon < 1) add("horizon", "horizon must be >= 1");
  if (s.prime_movers.empty()) add("prime_movers", "at least one prime mover is required");
  if (s.final_goods.empty()) add("final_goods", "at least one final good is required");

  std::set<std::string> ids;
  for (const auto& id : s.good_ids()) {
    if (id.empty()) add("id", "identifiers must be non-empty");
    if (!ids.insert(id).second) add("id:" + id, "duplicate identifier");
  }

  for (const auto& pm : s.prime_movers) {
    std::string base = "prime_movers[" + pm.id + "]";
    if (!(pm.epsilon > 0.0)) add(base + ".epsilon", "epsilon must be > 0");
    if (!(pm.power_rate > 0.0)) add(base + ".power_rate", "power_rate must be > 0");
    if (!(pm.depreciation > 0.0 && pm.depreciation < 1.0)) {
      add(base + ".depreciation", "depreciation outside (0,1)");
    }
    if (!(pm.initial_endowment >= 0.0)) add(base + ".initial_endowment", "initial_endowment must be >= 0");
    if (pm.build_energy && !(*pm.build_energy >= 0.0)) add(base + ".build_energy", "build_energy must be >= 0");
  }
  for (const auto& e : s.energy_goods) {
    std::string base = "energy_goods[" + e.id + "]";
    if (!(e.energy_content > 0.0)) add(base + ".energy_content", "energy_content must be > 0");
    if (!(e.initial_stock >= 0.0)) add(base + ".initial_stock", "initial_stock must be >= 0");
  }
  for (const auto& f : s.final_goods) {
    std::string base = "final_goods[" + f.id + "]";
    if (static_cast<int>(f.weights.size()) != s.horizon) {
      add(base + ".weights", "one utility weight per period is required");
    }
    bool positive = false;
    for (double w : f.weights) {
      if (!(w >= 0.0)) add(base + ".weights", "utility weights must be >= 0");
      positive = positive || w > 0.0;
    }
    if (!positive) add(base + ".weights", "at least one utility weight must be positive");
  }

  std::set<std::string> with_tech;
  for (const auto& tech : s.technologies) {
    std::string base = "technologies[" + tech.good + "]";
    if (!s.find_good(tech.good)) add(base + ".good", "technology references an unknown good");
    if (!with_tech.insert(tech.good).second) add(base, "duplicate technology for good");
    if (!(tech.scale > 0.0)) add(base + ".scale", "scale must be > 0");
    if (tech.coefficients.size() != s.prime_movers.size()) {
      add(base + ".coefficients", "one coefficient per prime mover is required");
    }
    bool positive = false;
    for (double a : tech.coefficients) {
      if (!(a >= 0.0)) add(base + ".coefficients", "coefficients must be >= 0");
      positive = positive || a > 0.0;
    }
    if (!positive) add(base + ".coefficients", "at least one coefficient must be positive");
    if (tech.form == TechForm::kCobbDouglas && tech.returns_to_scale() > 1.0 + 1e-12) {
      add(base + ".coefficients", "non-concave technology (sum of exponents > 1)");
    }
  }
  for (const auto& f : s.final_goods) {
    if (!with_tech.count(f.id)) add("technologies[" + f.id + "]", "final good has no technology");
  }
  for (const auto& e : s.energy_goods) {
    if (!with_tech.count(e.id)) add("technologies[" + e.id + "]", "energy good has no technology");
  }

  if (s.money) {
    const auto& m = *s.money;
    if (!m.real_good.empty() && !s.find_good(m.real_good)) add("money.real_good", "real money must be an existing good");
    if (!(m.real_quantity > 0.0)) add("money.Q_m", "Q_m must be > 0");
    if (!(m.nominal_quantity > 0.0)) add("money.Q_n", "Q_n must be > 0");
  }
  for (const auto& v : s.solver.violations()) {
    add("solver", v);
  }
  return out;
}

}  // namespace energyecon
