#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twaves {

/// Failure categories raised by the library. Every public operation reports
/// failures by throwing `twaves::Error` carrying one of these codes.
enum class ErrorCode {
  InvalidArgument,
  // model
  NoBackgroundRoot,
  DegenerateRoot,
  DegenerateSoundSpeed,
  // spectral
  SizeMismatch,
  NonRealResult,
  NotZeroMean,
  // kpi
  DegenerateGamma,
  DivergedIteration,
  ZeroInitialGuess,
  DivisionByZero,
  UnsupportedDimension,
  NotConverged,
  // nlstw
  BoundaryMismatch,
  VortexDetected,
  NewtonDiverged,
  SupersonicSpeed,
  SonicDegenerate,
  ConstraintLost,
  Stalled,
  NoPositiveRoot,
  Diverged,
  LiftingLost,
  // transonic
  BoxNotCommensurate,
  GridMismatch,
  InsufficientPoints,
  // cli / io
  ParseError,
  ValidationError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoBackgroundRoot: return "NoBackgroundRoot";
    case ErrorCode::DegenerateRoot: return "DegenerateRoot";
    case ErrorCode::DegenerateSoundSpeed: return "DegenerateSoundSpeed";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonRealResult: return "NonRealResult";
    case ErrorCode::NotZeroMean: return "NotZeroMean";
    case ErrorCode::DegenerateGamma: return "DegenerateGamma";
    case ErrorCode::DivergedIteration: return "DivergedIteration";
    case ErrorCode::ZeroInitialGuess: return "ZeroInitialGuess";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::BoundaryMismatch: return "BoundaryMismatch";
    case ErrorCode::VortexDetected: return "VortexDetected";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::SupersonicSpeed: return "SupersonicSpeed";
    case ErrorCode::SonicDegenerate: return "SonicDegenerate";
    case ErrorCode::ConstraintLost: return "ConstraintLost";
    case ErrorCode::Stalled: return "Stalled";
    case ErrorCode::NoPositiveRoot: return "NoPositiveRoot";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::LiftingLost: return "LiftingLost";
    case ErrorCode::BoxNotCommensurate: return "BoxNotCommensurate";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace twaves
