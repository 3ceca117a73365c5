#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace saod {

enum class ErrorCode {
  MalformedFile,
  UnknownClass,
  DuplicateImageId,
  ScoreOutOfRange,
  CovarianceNotPositive,
  FileNotFound,
  InvalidTau,
  InvalidArgument,
  EmptyCurve,
  DegenerateInstance,
  NoDetections,
  MissingClassModel,
  NonFiniteLogit,
  DegenerateBounds,
  EmptySplit,
  MissingSeverity,
  SplitOverlap,
  MissingDecisions,
  InfeasibleSpec,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the toolkit carries a stable code so callers (and
// the CLI diagnostic stream) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace saod
