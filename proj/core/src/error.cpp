#include "dmad/error.hpp"

namespace dmad {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kDecodeError: return "DecodeError";
    case ErrorKind::kCropOutOfBounds: return "CropOutOfBounds";
    case ErrorKind::kPlaneTooSmall: return "PlaneTooSmall";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kSingleClassError: return "SingleClassError";
    case ErrorKind::kSolverError: return "SolverError";
    case ErrorKind::kConfigMismatch: return "ConfigMismatch";
    case ErrorKind::kEmptyScores: return "EmptyScores";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kSchemaError: return "SchemaError";
    case ErrorKind::kLeakageError: return "LeakageError";
    case ErrorKind::kVersionError: return "VersionError";
    case ErrorKind::kChecksumError: return "ChecksumError";
    case ErrorKind::kUsageError: return "UsageError";
  }
  return "UnknownError";
}

}  // namespace dmad
