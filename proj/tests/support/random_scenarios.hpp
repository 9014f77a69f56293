#pragma once

// Small randomized economies: one or two goods of each class, one or two
// prime movers and up to three periods. Technologies have decreasing
// returns so every planner problem is strictly concave.

#include <random>
#include <string>

#include "energyecon/economy_model.hpp"

namespace energyecon::testing {

inline EconomyScenario random_scenario(std::mt19937_64& rng, int index) {
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto count = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  EconomyScenario s;
  s.name = "random-" + std::to_string(index);
  s.horizon = count(1, 3);
  const int movers = count(1, 2), energy = count(1, 2), finals = count(1, 2);
  const char* mover_ids[] = {"worker", "engine"};
  const char* energy_ids[] = {"grain", "coal"};
  const char* final_ids[] = {"bread", "cloth"};

  for (int l = 0; l < movers; ++l) {
    const double eps = uniform(5.0, 12.0);
    s.prime_movers.push_back({mover_ids[l], eps, eps, uniform(0.7, 0.95), uniform(3.0, 15.0), uniform(20.0, 100.0)});
  }
  for (int e = 0; e < energy; ++e) {
    s.energy_goods.push_back({energy_ids[e], uniform(60.0, 120.0), uniform(0.1, 0.5)});
  }
  for (int f = 0; f < finals; ++f) {
    std::vector<double> w;
    const double base = uniform(0.3, 1.0);
    for (int t = 0; t < s.horizon; ++t) w.push_back(base * uniform(0.8, 1.2));
    s.final_goods.push_back({final_ids[f], w});
  }
  auto coefficients = [&] {
    std::vector<double> c;
    double sum = 0.0;
    for (int l = 0; l < movers; ++l) {
      c.push_back(uniform(0.1, 0.6));
      sum += c.back();
    }
    const double cap = uniform(0.6, 0.9);
    if (sum > cap) {
      for (double& v : c) v *= cap / sum;
    }
    return c;
  };
  for (int f = 0; f < finals; ++f) {
    s.technologies.push_back({final_ids[f], TechForm::kCobbDouglas, uniform(0.5, 1.5), coefficients()});
  }
  for (int e = 0; e < energy; ++e) {
    s.technologies.push_back({energy_ids[e], TechForm::kCobbDouglas, uniform(0.6, 1.2), coefficients()});
  }
  for (int l = 0; l < movers; ++l) {
    s.technologies.push_back({mover_ids[l], TechForm::kCobbDouglas, uniform(0.2, 0.6), coefficients()});
  }
  s.money = MoneySpec{"", 100.0, 1000.0, false};
  return s;
}

}  // namespace energyecon::testing
