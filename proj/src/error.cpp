#include "planehec/error.hpp"

namespace planehec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidPlane: return "invalid-plane";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kDegenerateSample: return "degenerate-sample";
    case ErrorCode::kDetectionFailure: return "detection-failure";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerateMotion: return "degenerate-motion";
    case ErrorCode::kDegenerateNormals: return "degenerate-normals";
    case ErrorCode::kOrientationInconsistency: return "orientation-inconsistency";
    case ErrorCode::kOptimizationFailure: return "optimization-failure";
    case ErrorCode::kSceneConstruction: return "scene-construction";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

}  // namespace planehec
