#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "linecalib/text_io.hpp"

namespace linecalib {

struct GroundConfig {
  int ransac_iterations = 200;
  double inlier_band = 0.1;  // half of the 0.2 m ground thickness
  double min_inlier_ratio = 0.2;
};

struct LineRansacConfig {
  int iterations = 100;
  std::size_t min_inliers = 20;
};

struct LaneConfig {
  // Intensity threshold I0 = mean + intensity_sigma_factor * stddev over ground points.
  double intensity_sigma_factor = 1.0;
  double max_line_distance = 0.3;  // D0
  double line_tolerance = 0.15;
  std::size_t min_points = 30;
  // |z| of a lane direction in the ground-parallel frame must stay below this.
  double max_vertical = 0.1;
};

struct GridConfig {
  double x_min = 0.0;
  double x_max = 100.0;
  double y_min = -20.0;
  double y_max = 20.0;
  double cell = 0.5;
};

struct PoleConfig {
  double h0 = -1.0;  // points at or below are dropped
  double h1 = 3.0;   // a cell is kept when its maximum elevation exceeds this
  GridConfig grid;
  double line_tolerance = 0.15;
  std::size_t min_points = 30;
  double min_vertical = 0.9;
};

struct CloudFeatureConfig {
  std::size_t min_cloud_points = 1000;
  GroundConfig ground;
  LineRansacConfig line;
  LaneConfig lane;
  PoleConfig pole;
};

struct IdtConfig {
  double gamma0 = 0.98;  // inside the mask
  double gamma1 = 0.90;  // outside the mask
};

struct HoughConfig {
  double theta_step_deg = 1.0;
  double rho_step = 1.0;
  double band = 3.0;
  std::size_t min_support = 50;
  int max_lines = 8;
  double lane_horizontal_reject_deg = 10.0;
};

struct ImageFeatureConfig {
  IdtConfig idt;
  HoughConfig hough;
};

struct RefinementConfig {
  double t_range = 1.0;            // t0, meters
  double theta_range_deg = 0.1;    // theta0, degrees
  double rot_scale = 60.0;         // multiplier on theta0
  double eta = 1.0;                // initial step size
  double eta_min = 0.001;          // final step size
  double decay = 0.1;              // k
  int max_samples = 10000;
  int patience = 50;               // consecutive rejections before decaying eta
  std::uint64_t seed = 42;

  /// Throws Error(kInvalidConfig) when the invariants do not hold.
  void validate() const;
};

struct PipelineConfig {
  std::uint64_t seed = 42;
  CloudFeatureConfig cloud;
  ImageFeatureConfig image;
  RefinementConfig refine;

  void validate() const;
};

/// Every key is optional and defaults as above; unknown keys throw Error(kInvalidConfig).
PipelineConfig parse_config(const KeyValueText& kv);
PipelineConfig load_config(const std::filesystem::path& path);
/// All keys with their current values, loadable by parse_config.
std::string format_config(const PipelineConfig& cfg);

/// Derives an independent stream seed for a pipeline stage.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace linecalib
