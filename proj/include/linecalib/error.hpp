#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace linecalib {

enum class ErrorCode {
  kNotARotation,
  kParse,
  kIo,
  kDimensionMismatch,
  kInvalidArgument,
  kInvalidConfig,
  kInvalidSpec,
  kNoGroundPlane,
  kNoLanePoints,
  kNoPolePoints,
  kDegenerateFrame,
  kInsufficientLines,
  kEmptyTarget,
  kNoLines,
  kNoSolution,
  kDegenerateNormals,
  kNoValidCandidate,
  kEmptyList,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Stages of the end-to-end pipeline, in execution order.
enum class Stage { kParse, kExtraction, kCoarse, kRefine };

std::string_view to_string(Stage stage);

// An Error annotated with the pipeline stage that raised it.
class PipelineError : public Error {
 public:
  PipelineError(Stage stage, const Error& cause)
      : Error(cause.code(), std::string(to_string(stage)) + ": " + cause.what()),
        stage_(stage) {}

  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

}  // namespace linecalib
