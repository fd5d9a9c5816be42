#pragma once

#include <stdexcept>
#include <string>

namespace onn {

// Stable numeric values: these are exported through the C API.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kInvariantViolated = 2,
  kRampTooShallow = 3,
  kSingularMatrix = 4,
  kStepRejected = 5,
  kInsufficientCrossings = 6,
  kUnsupportedSize = 7,
  kLengthMismatch = 8,
  kBadMagic = 9,
  kTruncatedFile = 10,
  kCountMismatch = 11,
  kWrongShape = 12,
  kShapeMismatch = 13,
  kDivergence = 14,
  kInsufficientCalibration = 15,
  kIo = 16,
  kConfig = 17,
  kFormat = 18,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace onn
