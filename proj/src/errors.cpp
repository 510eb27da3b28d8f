#include "mobivital/errors.hpp"

namespace mobivital {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimensionOverflow: return "DimensionOverflow";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::BadOrder: return "BadOrder";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoQualifyingSequences: return "NoQualifyingSequences";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::NoDetections: return "NoDetections";
    case ErrorCode::BadRate: return "BadRate";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::TooFewPeaks: return "TooFewPeaks";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace mobivital
