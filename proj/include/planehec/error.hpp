#pragma once

#include <stdexcept>
#include <string>

namespace planehec {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidPlane,
  kDegenerateInput,
  kDegenerateSample,
  kDetectionFailure,
  kInsufficientData,
  kDegenerateMotion,
  kDegenerateNormals,
  kOrientationInconsistency,
  kOptimizationFailure,
  kSceneConstruction,
  kParse,
  kIo,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace planehec
