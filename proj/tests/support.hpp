#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "linecalib/cost.hpp"
#include "linecalib/geometry.hpp"
#include "linecalib/image_features.hpp"
#include "linecalib/pointcloud.hpp"
#include "linecalib/synthetic.hpp"

namespace linecalib::test {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
Vec3 random_unit(Rng& rng);
Mat3 random_rotation(Rng& rng);
/// Rotation of a uniform axis by an angle uniform in [-max_angle, max_angle].
Mat3 random_small_rotation(Rng& rng, double max_angle);
Extrinsic random_extrinsic(Rng& rng, double max_t = 10.0);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Cheap road cloud built directly, without ray casting: a ground patch, two
/// bright lane strips along x, two 6 m poles and a car-sized box, seen from a
/// sensor at ~1.7 m with a small tilt.
struct RoadCloud {
  PointCloud cloud;
  std::vector<SurfaceLabel> labels;
  Mat3 world_from_lidar;  // p_W = world_from_lidar * p_L + origin
  Vec3 origin;
  std::vector<double> lane_y;
};
RoadCloud make_road_cloud(Rng& rng);

/// Reduced scene for fast generation: 32 rings at 0.5 degrees and an eighth-size camera.
SceneSpec small_scene(std::uint64_t seed);
Intrinsics small_intrinsics();

/// Canonical scene spec with broader random variation of layout and truth,
/// for the line-correspondence oracle.
SceneSpec random_line_scene(Rng& rng);

/// Evaluator over the labelled lane and pole points of a generated frame.
CostEvaluator labelled_evaluator(const SyntheticFrame& frame, const IdtConfig& idt = {});

/// Mask with every pixel set whose centre is within `radius` of one of the segments.
void draw_segment(SemanticMask& mask, const Vec2& a, const Vec2& b, double radius);

struct CommandResult {
  int exit_code = -1;
  std::string out;  // stdout only
};
/// Runs a shell command, capturing stdout. stderr goes to `stderr_path` when given.
CommandResult run_command(const std::string& command, const std::string& stderr_path = "");

std::string read_file(const std::filesystem::path& path);

}  // namespace linecalib::test
