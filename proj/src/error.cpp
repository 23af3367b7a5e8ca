#include "linecalib/error.hpp"

namespace linecalib {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotARotation: return "NotARotation";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kNoGroundPlane: return "NoGroundPlane";
    case ErrorCode::kNoLanePoints: return "NoLanePoints";
    case ErrorCode::kNoPolePoints: return "NoPolePoints";
    case ErrorCode::kDegenerateFrame: return "DegenerateFrame";
    case ErrorCode::kInsufficientLines: return "InsufficientLines";
    case ErrorCode::kEmptyTarget: return "EmptyTarget";
    case ErrorCode::kNoLines: return "NoLines";
    case ErrorCode::kNoSolution: return "NoSolution";
    case ErrorCode::kDegenerateNormals: return "DegenerateNormals";
    case ErrorCode::kNoValidCandidate: return "NoValidCandidate";
    case ErrorCode::kEmptyList: return "EmptyList";
  }
  return "Unknown";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kParse: return "parse";
    case Stage::kExtraction: return "extraction";
    case Stage::kCoarse: return "coarse";
    case Stage::kRefine: return "refine";
  }
  return "unknown";
}

}  // namespace linecalib
