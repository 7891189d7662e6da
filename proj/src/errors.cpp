#include "liquid/errors.hpp"

namespace liquid {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidKnots: return "INVALID_KNOTS";
    case ErrorCode::IndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::SchemaViolation: return "SCHEMA_VIOLATION";
    case ErrorCode::DomainError: return "DOMAIN_ERROR";
    case ErrorCode::DegenerateClasses: return "DEGENERATE_CLASSES";
    case ErrorCode::Infeasible: return "INFEASIBLE";
    case ErrorCode::Unbounded: return "UNBOUNDED";
    case ErrorCode::IllConditioned: return "ILL_CONDITIONED";
    case ErrorCode::IterationLimit: return "ITERATION_LIMIT";
    case ErrorCode::ZeroVariance: return "ZERO_VARIANCE";
  }
  return "UNKNOWN";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateClasses:
    case ErrorCode::Infeasible:
    case ErrorCode::Unbounded:
    case ErrorCode::IllConditioned:
    case ErrorCode::IterationLimit:
    case ErrorCode::ZeroVariance:
      return true;
    default:
      return false;
  }
}

}  // namespace liquid
