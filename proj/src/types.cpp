#include "fieldcalib/types.hpp"

namespace fieldcalib {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kEmptyObservation:
      return "empty-observation";
    case ErrorCode::kDegenerateGeometry:
      return "degenerate-geometry";
    case ErrorCode::kNonFiniteGradient:
      return "non-finite-gradient";
    case ErrorCode::kOptimizationFailure:
      return "optimization-failure";
    case ErrorCode::kInversionFailure:
      return "inversion-failure";
    case ErrorCode::kNonInvertible:
      return "non-invertible";
    case ErrorCode::kMalformedInput:
      return "malformed-input";
    case ErrorCode::kUnknownLabel:
      return "unknown-label";
    case ErrorCode::kCoordinateRange:
      return "coordinate-range";
    case ErrorCode::kIo:
      return "io";
  }
  return "unknown";
}

const char* version() { return FIELDCALIB_VERSION; }

}  // namespace fieldcalib
