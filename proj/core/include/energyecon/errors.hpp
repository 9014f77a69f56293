#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace energyecon {

enum class ErrorCode {
  kDomainError,
  kNonFiniteMarginal,
  kNonFiniteEvaluation,
  kInfeasible,
  kNoConvergence,
  kNoFeasibleGridPoint,
  kDivisionByZero,
  kInconsistentAssignments,
  kInsufficientSurplus,
  kMissingHistory,
  kDegenerateFit,
  kFiatMoney,
  kValidation,
  kIoFailure,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Hard failures. Recoverable solver outcomes (no convergence with a best
// iterate, degenerate horizons, zero-trade outcomes) travel in result
// structs as a Status instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Status {
  kOk,
  kNoConvergence,
  kDegenerateHorizon,
  kNoGainsFromTrade,
};

std::string_view to_string(Status status);

}  // namespace energyecon
