#include "orbitsig/error.hpp"

namespace orbitsig {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "Usage";
    case ErrorCode::kBadParameter: return "BadParameter";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kBadSpec: return "BadSpec";
    case ErrorCode::kBadBand: return "BadBand";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kEmptySegment: return "EmptySegment";
    case ErrorCode::kMissingMetadata: return "MissingMetadata";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kDegenerateVector: return "DegenerateVector";
    case ErrorCode::kEmptyOrbitSet: return "EmptyOrbitSet";
    case ErrorCode::kClassMissingFromSplit: return "ClassMissingFromSplit";
    case ErrorCode::kFractionTooSmall: return "FractionTooSmall";
    case ErrorCode::kUnsupportedOnRawAudio: return "UnsupportedOnRawAudio";
    case ErrorCode::kNumericallySingular: return "NumericallySingular";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
      return 1;
    case ErrorCode::kNumericallySingular:
    case ErrorCode::kNumericalFailure:
      return 3;
    default:
      return 2;
  }
}

}  // namespace orbitsig
