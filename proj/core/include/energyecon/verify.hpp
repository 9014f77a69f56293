#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "energyecon/economy_model.hpp"

namespace energyecon {

struct InvariantCheck {
  std::string name;
  double value = 0.0;      // worst observed deviation
  double tolerance = 0.0;
  bool applicable = true;  // false: the scenario has nothing to check
  bool passed = true;
  std::string note;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int gradient_points = 1000;
  bool exchange = true;  // METC sampling and identical-agent trade
};

struct VerifyReport {
  std::string scenario_hash;
  std::uint64_t seed = 0;
  std::vector<InvariantCheck> checks;

  bool all_passed() const;
};

// Solves the scenario and checks every equilibrium identity the library
// reports, plus seeded gradient checks and small oracle cross-checks.
// Solver errors propagate as Error.
VerifyReport run_invariant_suite(const EconomyScenario& scenario, const VerifyOptions& options = {});

// Fixed-width table and CSV renderings; both are deterministic.
std::string verify_table(const VerifyReport& report);
std::string verify_csv(const VerifyReport& report);

}  // namespace energyecon
