#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "linecalib/cloud_features.hpp"
#include "linecalib/geometry.hpp"
#include "linecalib/image_features.hpp"
#include "linecalib/pointcloud.hpp"
#include "linecalib/text_io.hpp"

namespace linecalib {

// Scene geometry lives in a road frame W: ground is z = 0, lanes run along +x.
// The LiDAR sits at (0, 0, lidar_height) with heading road_yaw and mount tilt
// ground_roll / ground_pitch, so the ground is tilted as seen by the sensor.

struct PoleSpec {
  double x = 0.0;
  double y = 0.0;
  double height = 6.0;
  double radius = 0.12;
};

struct BoxSpec {
  Vec3 center = Vec3::Zero();  // center of the footprint, z = bottom face
  Vec3 size = Vec3::Ones();    // length (x), width (y), height (z)
  double yaw_deg = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 1;

  int lane_count = 2;
  double lane_spacing = 3.6;
  double lane_offset = 0.0;  // lateral center of the lane set
  double lane_width = 0.15;
  double lane_start = 0.0;
  double lane_end = 70.0;
  bool lane_dashed = false;
  double dash_length = 3.0;
  double gap_length = 5.0;
  double lane_intensity = 0.9;
  double ground_intensity = 0.1;
  double ground_intensity_sigma = 0.02;

  std::vector<PoleSpec> poles;
  double pole_intensity = 0.3;

  double lidar_height = 1.73;
  double ground_roll_deg = 0.0;
  double ground_pitch_deg = 0.0;
  double road_yaw_deg = 0.0;

  bool car = true;          // one car-sized box below the pole height filter
  int clutter_count = 4;    // extra low boxes placed from the seed
  std::vector<BoxSpec> boxes;
  double box_intensity = 0.15;

  int rings = 64;
  double elevation_min_deg = -25.0;
  double elevation_max_deg = 15.0;
  double azimuth_res_deg = 0.2;
  double min_range = 1.0;
  double max_range = 80.0;
  double noise_sigma = 0.02;  // Gaussian range noise clipped at 3 sigma, meters

  Extrinsic extrinsic;  // ground truth, LiDAR to camera
  Intrinsics intrinsics;
  // A pixel is set when its center lies within this distance of the projected
  // outline, so the raster edge stays within 1 px of the true edge.
  double mask_tolerance_px = 0.5;

  /// Throws Error(kInvalidSpec).
  void validate() const;
};

/// KITTI-like camera (1242 x 375).
Intrinsics kitti_intrinsics();
/// Wide front camera (1920 x 1200) used by canonical scenes.
Intrinsics wide_intrinsics();
/// Nominal LiDAR to camera extrinsic of a forward camera mounted near the LiDAR.
Extrinsic nominal_extrinsic();

/// Two solid lanes 3.6 m apart and two 6 m poles seen by the wide camera and a
/// 64-ring LiDAR spanning -25 to +15 degrees, with pose, tilt and pole
/// placement drawn from the seed.
SceneSpec canonical_scene(std::uint64_t seed);

/// Throws Error(kInvalidSpec) on unknown keys or bad values.
SceneSpec parse_scene_spec(const KeyValueText& kv);
SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string format_scene_spec(const SceneSpec& spec);

enum class SurfaceLabel : std::uint8_t { kGround, kLane, kPole, kBox };

struct SyntheticFrame {
  PointCloud cloud;
  std::vector<SurfaceLabel> labels;  // one per cloud point
  SemanticMask lane_mask;
  SemanticMask pole_mask;
  Extrinsic truth;
  Intrinsics intrinsics;
};

SyntheticFrame generate(const SceneSpec& spec);

struct TrueLines {
  std::vector<Line3D> lanes;  // center lines, LiDAR frame, direction along +x of W
  std::vector<Line3D> poles;  // axes, LiDAR frame, pointing up
  std::vector<Line2D> lane_images;
  std::vector<Line2D> pole_images;
  Plane3D ground;             // LiDAR frame, normal up
  GroundParallelFrame frame;  // from the ground and the first lane
};

TrueLines true_lines(const SceneSpec& spec);

/// LiDAR pose in the road frame: p_W = rotation * p_L + origin.
struct LidarPose {
  Mat3 rotation;
  Vec3 origin;
};
LidarPose lidar_pose(const SceneSpec& spec);

/// Boxes actually placed in the scene (explicit ones, the car, then clutter).
std::vector<BoxSpec> scene_boxes(const SceneSpec& spec);

/// Writes <name>.bin, <name>_lane.pgm, <name>_pole.pgm, intrinsics.txt and
/// <name>_truth.txt into dir.
std::vector<std::filesystem::path> write_bundle(const std::filesystem::path& dir,
                                                const std::string& name,
                                                const SyntheticFrame& frame);

}  // namespace linecalib
