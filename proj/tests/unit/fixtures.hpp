#pragma once

#include <string>
#include <vector>

#include "energyecon/economy_model.hpp"
#include "energyecon/errors.hpp"
#include "energyecon/scenario_io.hpp"

namespace energyecon::testing {

inline EconomyScenario load(const std::string& name) {
  return load_scenario(std::string(ENERGYECON_SCENARIO_DIR) + "/" + name);
}

inline EconomyScenario village() { return load("default.json"); }

inline ProductionTech cobb_douglas(std::string good, double scale, std::vector<double> alpha) {
  return {std::move(good), TechForm::kCobbDouglas, scale, std::move(alpha)};
}

inline ProductionTech linear(std::string good, double scale, std::vector<double> alpha) {
  return {std::move(good), TechForm::kLinear, scale, std::move(alpha)};
}

// One final good made by one prime mover; no energy goods, so the whole
// budget comes from nowhere and callers add what they need.
inline EconomyScenario bare(int horizon) {
  EconomyScenario s;
  s.name = "bare";
  s.horizon = horizon;
  return s;
}

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an energyecon::Error";
  return ErrorCode::kInvalidArgument;
}

}  // namespace energyecon::testing
