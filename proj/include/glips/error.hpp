#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glips {

enum class ErrorCode {
  // imagery
  FileNotFound,
  UnsupportedFormat,
  CorruptImage,
  InvalidSpec,
  IndexOutOfRange,
  DimensionMismatch,
  // backend
  ModelLoadError,
  MissingOutput,
  ShapeMismatch,
  InferenceError,
  // glips
  EmptyAttention,
  LengthMismatch,
  ValueOutOfRange,
  SelectionLengthMismatch,
  EmptyPairing,
  UnresolvedHyperparameter,
  EmptyFeatureSet,
  // baselines
  TooSmallForScales,
  InsufficientSamples,
  EigenFailure,
  Empty,
  DivisionByZeroHumanScore,
  // ibs
  MalformedBinConfig,
  OverlappingBins,
  MissingLikertSpan,
  NonFiniteInput,
  OutOfRange,
  UnknownMetric,
  // harness
  MalformedCsv,
  ScoreOutOfRange,
  MalformedManifest,
  MissingHumanScore,
  IoError,
  EmptyLambdaList,
  // generic argument validation
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ModelLoadError: return "ModelLoadError";
    case ErrorCode::MissingOutput: return "MissingOutput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InferenceError: return "InferenceError";
    case ErrorCode::EmptyAttention: return "EmptyAttention";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::SelectionLengthMismatch: return "SelectionLengthMismatch";
    case ErrorCode::EmptyPairing: return "EmptyPairing";
    case ErrorCode::UnresolvedHyperparameter: return "UnresolvedHyperparameter";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::TooSmallForScales: return "TooSmallForScales";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::DivisionByZeroHumanScore: return "DivisionByZeroHumanScore";
    case ErrorCode::MalformedBinConfig: return "MalformedBinConfig";
    case ErrorCode::OverlappingBins: return "OverlappingBins";
    case ErrorCode::MissingLikertSpan: return "MissingLikertSpan";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::UnknownMetric: return "UnknownMetric";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::MissingHumanScore: return "MissingHumanScore";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyLambdaList: return "EmptyLambdaList";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// True for failures that originate in model loading or inference; the CLI
/// maps these to a distinct exit code.
constexpr bool is_backend_error(ErrorCode code) {
  return code == ErrorCode::ModelLoadError || code == ErrorCode::MissingOutput ||
         code == ErrorCode::ShapeMismatch || code == ErrorCode::InferenceError;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace glips
