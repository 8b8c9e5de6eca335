#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmad {

enum class ErrorKind {
  kIoError,
  kDecodeError,
  kCropOutOfBounds,
  kPlaneTooSmall,
  kInvalidConfig,
  kDimensionMismatch,
  kSingleClassError,
  kSolverError,
  kConfigMismatch,
  kEmptyScores,
  kParseError,
  kSchemaError,
  kLeakageError,
  kVersionError,
  kChecksumError,
  kUsageError,
};

/// Stable identifier printed after `error_kind:` by the command line tool.
std::string_view to_string(ErrorKind kind);

/// All library failures are reported through this exception type. The kind
/// is the machine-readable part; what() carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dmad
