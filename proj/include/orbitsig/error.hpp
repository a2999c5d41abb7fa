#pragma once

#include <stdexcept>
#include <string>

namespace orbitsig {

// Every failure the library reports carries one of these codes. The CLI maps
// them onto process exit codes (see exit_code_for).
enum class ErrorCode {
  kUsage,
  kBadParameter,
  kBadConfig,
  kBadSpec,
  kBadBand,
  kSignalTooShort,
  kEmptySegment,
  kMissingMetadata,
  kKTooLarge,
  kFormatError,
  kDimensionMismatch,
  kLengthMismatch,
  kTooFewSamples,
  kDegenerateVector,
  kEmptyOrbitSet,
  kClassMissingFromSplit,
  kFractionTooSmall,
  kUnsupportedOnRawAudio,
  kNumericallySingular,
  kNumericalFailure,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// 1 usage error, 2 data/format error, 3 numerical failure.
int exit_code_for(ErrorCode code);

}  // namespace orbitsig
