#include "energyecon/errors.hpp"

namespace energyecon {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kNonFiniteMarginal: return "NonFiniteMarginal";
    case ErrorCode::kNonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kNoFeasibleGridPoint: return "NoFeasibleGridPoint";
    case ErrorCode::kDivisionByZero: return "DivisionByZero";
    case ErrorCode::kInconsistentAssignments: return "InconsistentAssignments";
    case ErrorCode::kInsufficientSurplus: return "InsufficientSurplus";
    case ErrorCode::kMissingHistory: return "MissingHistory";
    case ErrorCode::kDegenerateFit: return "DegenerateFit";
    case ErrorCode::kFiatMoney: return "FiatMoney";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kOk: return "ok";
    case Status::kNoConvergence: return "no_convergence";
    case Status::kDegenerateHorizon: return "degenerate_horizon";
    case Status::kNoGainsFromTrade: return "no_gains_from_trade";
  }
  return "unknown";
}

}  // namespace energyecon
