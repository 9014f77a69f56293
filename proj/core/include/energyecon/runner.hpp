#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "energyecon/report.hpp"

namespace energyecon {

enum class Command { kSolveAutarky, kSolveExchange, kPriceReport, kVerify };

std::optional<Command> parse_command(std::string_view name);
std::string_view to_string(Command command);

// How consumption reacts to the market transfer level during exchange.
enum class DemandMode { kFixedConsumption, kReSolve };

struct RunOptions {
  std::filesystem::path out = ".";
  ReportFormat format = ReportFormat::kBoth;
  std::uint64_t seed = 1;
  DemandMode mode = DemandMode::kFixedConsumption;
  int period = 1;  // 1-based period used for price tables and trade
};

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitVerifyFailed = 4;
inline constexpr int kExitIo = 5;

int exit_code_for(ErrorCode code);

// One JSON object on a single line: error, message and, for validation
// failures, the list of violated fields.
std::string error_line(ErrorCode code, std::string_view message, const std::vector<Violation>& violations = {});

// Loads and validates a scenario file. Throws Error(kValidation) carrying
// the first violation; `violations` receives all of them.
EconomyScenario load_valid_scenario(const std::filesystem::path& path, std::vector<Violation>* violations = nullptr);

// Runs one command. solve-exchange takes two or more scenario files, the
// others exactly one. Artifacts go to options.out; a short summary goes to
// `out` and a single error line to `err`. Returns the exit code.
int run_scenario(Command command, const std::vector<std::filesystem::path>& scenarios, const RunOptions& options,
                 std::ostream& out, std::ostream& err);

}  // namespace energyecon
