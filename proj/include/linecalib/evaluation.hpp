#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linecalib/config.hpp"
#include "linecalib/cost.hpp"
#include "linecalib/geometry.hpp"

namespace linecalib {

/// Errors of an estimated extrinsic against a reference. Angles in radians.
struct CalibrationError {
  double dt = 0.0;
  double dtheta = 0.0;
  double dtx = 0.0;
  double dty = 0.0;
  double dtz = 0.0;
  double droll = 0.0;
  double dpitch = 0.0;
  double dyaw = 0.0;
};

/// Euclidean distance between the translations.
double translation_error(const Extrinsic& est, const Extrinsic& ref);
/// Geodesic angle between the rotations, radians.
double rotation_error(const Extrinsic& est, const Extrinsic& ref);
/// Per-axis angles come from the ZYX decomposition of R_est * R_ref^T.
CalibrationError compute_error(const Extrinsic& est, const Extrinsic& ref);

/// Per-field means. Throws Error(kEmptyList).
CalibrationError aggregate(std::span<const CalibrationError> errors);

/// Nearest-rank percentile, p in (0, 100]. Throws Error(kEmptyList).
double percentile(std::vector<double> values, double p);

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
double rank_correlation(std::span<const double> x, std::span<const double> y);

/// CSV header and rows for reports. Angles are written in degrees.
std::string csv_header();
std::string csv_row(const std::string& id, const CalibrationError& e);

/// Uniform perturbation: each translation component in [-max_t, max_t] and each
/// ZYX Euler angle of a left-multiplied rotation in [-max_theta, max_theta].
Extrinsic perturb(const Extrinsic& ref, double max_t, double max_theta, std::uint64_t seed);

struct SweepFrame {
  std::string id;
  const CostEvaluator* evaluator = nullptr;
  Extrinsic reference;
};

struct SweepTrial {
  std::size_t frame = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Extrinsic initial;
  CalibrationError initial_error;
  std::optional<Extrinsic> refined;
  CalibrationError refined_error;
  std::string failure;  // empty on success
};

struct SweepOptions {
  std::size_t trials = 10;
  double max_t = 1.0;
  double max_theta = deg2rad(6.0);
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  RefinementConfig refine;
};

/// Runs `trials` perturb-and-refine trials per frame. Trial k of frame f uses
/// seed + (f * trials + k) for both the perturbation and the refinement; errors
/// are recorded per trial. Results are ordered by (frame, trial) for any jobs.
std::vector<SweepTrial> robustness_sweep(std::span<const SweepFrame> frames,
                                         const SweepOptions& options);

}  // namespace linecalib
