#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "energyecon/economy_model.hpp"

namespace energyecon {

// Structural problems (missing keys, wrong types, unknown prime movers in a
// technology) throw Error(kValidation) naming the field. Semantic checks are
// left to validate_scenario.
EconomyScenario scenario_from_json(const nlohmann::json& doc);
EconomyScenario parse_scenario(std::string_view text);
// Error(kIoFailure) when the file cannot be read.
EconomyScenario load_scenario(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const EconomyScenario& scenario);
// Pretty-printed with sorted keys and shortest round-trip numbers.
std::string serialize_scenario(const EconomyScenario& scenario);

// FNV-1a (64 bit) of the compact canonical serialization, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string scenario_hash(const EconomyScenario& scenario);

// Writes through a sibling temporary file and renames it into place,
// creating missing parent directories.
// Throws Error(kIoFailure).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace energyecon
