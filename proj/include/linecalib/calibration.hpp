#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "linecalib/cloud_features.hpp"
#include "linecalib/config.hpp"
#include "linecalib/cost.hpp"
#include "linecalib/image_features.hpp"
#include "linecalib/p3l.hpp"
#include "linecalib/pointcloud.hpp"

namespace linecalib {

struct CoarseCandidate {
  std::size_t assignment = 0;  // index in enumeration order
  std::size_t lane_a = 0;      // cloud lane matched to image lane 1
  std::size_t lane_b = 0;      // cloud lane matched to image lane 2
  std::size_t pole = 0;
  Extrinsic extrinsic;
  double cost = 0.0;
};

struct CoarseResult {
  Extrinsic extrinsic;
  double cost = 0.0;
  std::size_t assignments = 0;         // P3L solves, n1 (n1 - 1) n2
  std::size_t failed_assignments = 0;  // solves that raised
  std::vector<CoarseCandidate> candidates;  // every scored extrinsic, enumeration order
};

/// Enumerates every ordered (lane_a, lane_b, pole) assignment of cloud lines to
/// the fixed image triple, solves each P3L problem and returns the candidate
/// with the highest cost (first in enumeration order on ties).
/// Throws Error(kNoValidCandidate) when nothing scores above zero.
CoarseResult coarse_calibrate(const std::vector<Line3D>& cloud_lanes,
                              const std::vector<Line3D>& cloud_poles,
                              const GroundParallelFrame& frame, const PrincipalLines& image,
                              const CostEvaluator& ev);

CoarseResult coarse_calibrate(const FeatureSetCloud& cloud, const FeatureSetImage& image,
                              const CostEvaluator& ev);

struct RefineResult {
  Extrinsic extrinsic;
  double initial_cost = 0.0;
  double cost = 0.0;
  int samples = 0;
  int accepted = 0;
  double final_eta = 0.0;
  std::vector<double> accepted_costs;  // cost after each accepted step
};

/// Random-search hill climbing around the current best extrinsic. A sample
/// perturbs the translation uniformly in [-eta t0, eta t0]^3 and the rotation
/// by a uniform axis and an angle in [-eta theta0 rot_scale, +...]; it is
/// accepted only when the cost strictly increases. After `patience`
/// consecutive rejections eta shrinks by `decay`; the search stops once eta
/// drops below eta_min or max_samples is spent.
RefineResult refine(const Extrinsic& initial, const CostEvaluator& ev, const RefinementConfig& cfg);

/// Per-frame features shared by the coarse and refine stages.
struct FrameFeatures {
  FeatureSetCloud cloud;
  FeatureSetImage image;
  CostEvaluator evaluator;
};

/// Throws PipelineError(Stage::kExtraction, ...) on any extraction failure.
FrameFeatures extract_frame_features(const PointCloud& cloud, SemanticMask lane_mask,
                                     SemanticMask pole_mask, const Intrinsics& intrinsics,
                                     const PipelineConfig& cfg);

struct StageTimings {
  double extraction_s = 0.0;
  double coarse_s = 0.0;
  double refine_s = 0.0;
  double total_s = 0.0;
};

struct CalibrationReport {
  std::size_t cloud_points = 0;
  std::size_t ground_points = 0;
  std::size_t lane_points = 0;
  std::size_t pole_points = 0;
  std::size_t cloud_lane_lines = 0;
  std::size_t cloud_pole_lines = 0;
  std::size_t image_lane_lines = 0;
  std::size_t image_pole_lines = 0;
  std::size_t assignments = 0;
  std::size_t candidates = 0;
  bool has_coarse = false;
  bool has_refined = false;
  Extrinsic coarse;
  double coarse_cost = 0.0;
  Extrinsic refined;
  double refined_cost = 0.0;
  int refine_samples = 0;
  int refine_accepted = 0;
  StageTimings timings;
};

/// Deterministic text report (key = value). Timings are appended only when asked,
/// since they differ between runs.
std::string format_report(const CalibrationReport& report, bool with_timings = false);

enum class PipelineMode { kFull, kCoarseOnly };

struct CalibrationResult {
  Extrinsic extrinsic;
  CalibrationReport report;
};

/// Extraction, coarse solve and refinement. Errors are rethrown as
/// PipelineError naming the failing stage.
CalibrationResult calibrate(const PointCloud& cloud, SemanticMask lane_mask,
                            SemanticMask pole_mask, const Intrinsics& intrinsics,
                            const PipelineConfig& cfg, PipelineMode mode = PipelineMode::kFull);

/// Extraction followed by refinement from a given initial extrinsic.
CalibrationResult refine_from(const PointCloud& cloud, SemanticMask lane_mask,
                              SemanticMask pole_mask, const Intrinsics& intrinsics,
                              const Extrinsic& initial, const PipelineConfig& cfg);

}  // namespace linecalib
