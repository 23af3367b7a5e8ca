#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "linecalib/config.hpp"
#include "linecalib/geometry.hpp"
#include "linecalib/pointcloud.hpp"

namespace linecalib {

/// Partition of a cloud into ground-plane points and everything else.
struct GroundSegmentation {
  Plane3D plane;  // normal has positive LiDAR z
  std::vector<std::size_t> ground_indices;
  std::vector<std::size_t> object_indices;
};

/// Rotation R_L^G into the ground-parallel frame G: z along the ground normal,
/// x along a reference lane projected onto the ground.
struct GroundParallelFrame {
  Mat3 rotation = Mat3::Identity();

  Vec3 to_ground(const Vec3& p_lidar) const { return rotation * p_lidar; }
  Vec3 to_lidar(const Vec3& p_ground) const { return rotation.transpose() * p_ground; }
};

struct LineFit {
  Line3D line;
  std::vector<std::size_t> inliers;  // indices into the fitted point set
};

/// RANSAC plane fit. Throws Error(kNoGroundPlane) when fewer than
/// cfg.min_inlier_ratio of the points lie within cfg.inlier_band of the best plane.
GroundSegmentation fit_ground_plane(const PointCloud& cloud, const GroundConfig& cfg,
                                    std::uint64_t seed);

/// Greedy sequential RANSAC: fit the best line, remove its inliers, repeat
/// while a line with at least cfg.min_inliers inliers exists. Each line is
/// refined by least squares over its inliers and passes through their centroid.
std::vector<LineFit> ransac_line3d(std::span<const Vec3> points, double inlier_tol,
                                   std::uint64_t seed, const LineRansacConfig& cfg = {});

/// High-intensity ground points that lie near a fitted line. Returns cloud
/// indices, a subset of seg.ground_indices. Throws Error(kNoLanePoints).
std::vector<std::size_t> extract_lane_points(const GroundSegmentation& seg,
                                             const PointCloud& cloud, const LaneConfig& lane,
                                             const LineRansacConfig& line, std::uint64_t seed);

/// Throws Error(kDegenerateFrame) when the lane is within 5 degrees of the normal.
GroundParallelFrame ground_parallel_rotation(const Plane3D& plane, const Line3D& reference_lane);

/// Object points inside grid cells whose maximum elevation exceeds h1, minus
/// points at or below h0. Returns cloud indices, a subset of seg.object_indices.
/// Throws Error(kNoPolePoints).
std::vector<std::size_t> extract_pole_points(const GroundSegmentation& seg,
                                             const PointCloud& cloud,
                                             const GroundParallelFrame& frame,
                                             const PoleConfig& cfg);

/// Groups pole points by 8-connected occupied grid cells in G. Returns
/// clusters of cloud indices ordered by their first cell.
std::vector<std::vector<std::size_t>> cluster_pole_points(const std::vector<std::size_t>& indices,
                                                          const PointCloud& cloud,
                                                          const GroundParallelFrame& frame,
                                                          const GridConfig& grid);

struct FeatureSetCloud {
  GroundSegmentation ground;
  GroundParallelFrame frame;
  std::vector<std::size_t> lane_indices;
  std::vector<std::size_t> pole_indices;
  std::vector<Vec3> lane_points;
  std::vector<Vec3> pole_points;
  // Sorted by inlier count, largest first. Lane directions point along +x of G,
  // pole directions along +z of G.
  std::vector<LineFit> lane_lines;
  std::vector<LineFit> pole_lines;
};

/// Full cloud-side extraction: ground, lane points, frame, pole points and lines.
/// Throws Error(kInsufficientLines) with fewer than 2 lane or 1 pole line.
FeatureSetCloud extract_cloud_features(const PointCloud& cloud, const CloudFeatureConfig& cfg,
                                       std::uint64_t seed);

}  // namespace linecalib
