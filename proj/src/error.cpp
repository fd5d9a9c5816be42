#include "onn/error.hpp"

namespace onn {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvariantViolated: return "InvariantViolated";
    case ErrorCode::kRampTooShallow: return "RampTooShallow";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kStepRejected: return "StepRejected";
    case ErrorCode::kInsufficientCrossings: return "InsufficientCrossings";
    case ErrorCode::kUnsupportedSize: return "UnsupportedSize";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kWrongShape: return "WrongShape";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kInsufficientCalibration: return "InsufficientCalibration";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kConfig: return "Config";
    case ErrorCode::kFormat: return "Format";
  }
  return "Unknown";
}

}  // namespace onn
