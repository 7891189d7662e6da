#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace liquid {

enum class ErrorCode {
  InvalidKnots,
  IndexOutOfRange,
  InvalidArgument,
  ConfigError,
  SchemaViolation,
  DomainError,
  DegenerateClasses,
  Infeasible,
  Unbounded,
  IllConditioned,
  IterationLimit,
  ZeroVariance,
};

/// Stable machine-readable name, used in CLI and HTTP error bodies.
std::string_view error_code_name(ErrorCode code);

/// True for failures of the numerics (as opposed to malformed input).
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string subject = {})
      : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  /// The column or characteristic the error is about, when there is one.
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace liquid
