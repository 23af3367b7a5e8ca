#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "linecalib/geometry.hpp"

namespace linecalib {

struct LidarPoint {
  Vec3 position = Vec3::Zero();
  double intensity = 0.0;
};

struct PointCloud {
  std::vector<LidarPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  /// Throws Error(kInvalidArgument) on non-finite values or negative intensity.
  void validate() const;
};

/// Loads a KITTI-style velodyne scan: contiguous little-endian float32 records
/// (x, y, z, intensity). Files ending in .txt/.xyz/.asc are read as ASCII,
/// one `x y z intensity` line per point.
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud_bin(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace linecalib
