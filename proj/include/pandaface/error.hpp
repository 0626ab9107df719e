#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pandaface {

enum class ErrorCode {
  InvalidArgument,
  SingularTransform,
  EmptyEdgeSet,
  DegenerateGeometry,
  NonFinite,
  OutOfBounds,
  ImageTooSmall,
  GridTooFine,
  InvalidComponents,
  DimensionMismatch,
  AlignmentFailure,
  InsufficientData,
  NoFiniteScores,
  UnknownIdentity,
  IoError,
  FormatVersionMismatch,
  ChecksumMismatch,
  ClosedSetViolation,
  EmptyScores,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::EmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::GridTooFine: return "GridTooFine";
    case ErrorCode::InvalidComponents: return "InvalidComponents";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AlignmentFailure: return "AlignmentFailure";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoFiniteScores: return "NoFiniteScores";
    case ErrorCode::UnknownIdentity: return "UnknownIdentity";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ClosedSetViolation: return "ClosedSetViolation";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pandaface
