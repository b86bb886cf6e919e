#include "feedloc/error.hpp"

namespace feedloc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::CheiralityFailure: return "CheiralityFailure";
    case ErrorCode::ReprojectionRejected: return "ReprojectionRejected";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingBlob: return "MissingBlob";
    case ErrorCode::NoReferencesSurvive: return "NoReferencesSurvive";
    case ErrorCode::NoValidPairs: return "NoValidPairs";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::DegenerateRadius: return "DegenerateRadius";
    case ErrorCode::TooFewCameras: return "TooFewCameras";
    case ErrorCode::AllCandidatesDegenerate: return "AllCandidatesDegenerate";
    case ErrorCode::NoScaleAvailable: return "NoScaleAvailable";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::SolverDegenerate: return "SolverDegenerate";
    case ErrorCode::InvisibleScene: return "InvisibleScene";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

}  // namespace feedloc
