#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mobivital {

enum class ErrorCode {
  BadMagic,
  TruncatedFile,
  DimensionOverflow,
  IoFailure,
  InvariantViolation,
  TooShort,
  WindowTooLarge,
  BadOrder,
  LengthMismatch,
  ShapeMismatch,
  NoQualifyingSequences,
  EmptyTrainSet,
  DivergedLoss,
  VersionMismatch,
  EmptyBank,
  NoDetections,
  BadRate,
  ScenarioInvalid,
  TooFewPeaks,
  EmptyCorpus,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code identifies the failure
// class, the message carries context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mobivital
