#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feedloc {

enum class ErrorCode {
  // geometry
  NonPositiveDepth,
  DegenerateBaseline,
  CheiralityFailure,
  ReprojectionRejected,
  // bundle i/o
  IoFailure,
  InvariantViolation,
  BadMagic,
  ShapeMismatch,
  MissingBlob,
  NoReferencesSurvive,
  // scale estimation
  NoValidPairs,
  EmptySamples,
  DegenerateRadius,
  TooFewCameras,
  AllCandidatesDegenerate,
  NoScaleAvailable,
  // refinement
  InvalidDepth,
  TooFewCorrespondences,
  SolverDegenerate,
  // simulator
  InvisibleScene,
  InvalidSpec,
  // evaluation
  EmptyInput,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library surfaces as this exception; the
/// code identifies the failure so callers can branch (e.g. fall back to the
/// coarse pose on TooFewCorrespondences) without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace feedloc
