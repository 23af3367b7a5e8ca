#include "linecalib/cost.hpp"

#include <cmath>

#include "linecalib/error.hpp"

namespace linecalib {

namespace {

Eigen::Matrix3Xd to_matrix(const std::vector<Vec3>& points) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = points[i];
  return m;
}

}  // namespace

CostEvaluator::CostEvaluator(const Intrinsics& intrinsics, HeightMap lane_height,
                             HeightMap pole_height, const std::vector<Vec3>& lane_points,
                             const std::vector<Vec3>& pole_points)
    : intrinsics_(intrinsics),
      lane_height_(std::move(lane_height)),
      pole_height_(std::move(pole_height)),
      lane_points_(to_matrix(lane_points)),
      pole_points_(to_matrix(pole_points)) {
  if (lane_points.empty() || pole_points.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cost needs non-empty lane and pole point sets");
  }
  for (const HeightMap* map : {&lane_height_, &pole_height_}) {
    if (map->width != intrinsics.width || map->height != intrinsics.height) {
      throw Error(ErrorCode::kDimensionMismatch, "height map size differs from the camera");
    }
  }
}

double CostEvaluator::mean_height(const Eigen::Matrix3Xd& points, const HeightMap& map,
                                  const Mat3& R, const Vec3& t) const {
  const double fx = intrinsics_.fx, fy = intrinsics_.fy, cx = intrinsics_.cx, cy = intrinsics_.cy;
  const int w = map.width, h = map.height;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const Vec3 p = R * points.col(i) + t;
    if (!(p.z() > kMinDepth)) continue;
    const double u = fx * p.x() / p.z() + cx;
    const double v = fy * p.y() / p.z() + cy;
    // Pixel (iu, iv) covers [iu - 0.5, iu + 0.5) x [iv - 0.5, iv + 0.5).
    const double fu = std::floor(u + 0.5), fv = std::floor(v + 0.5);
    if (!(fu >= 0.0 && fu < w && fv >= 0.0 && fv < h)) continue;
    sum += map.values[static_cast<std::size_t>(fv) * w + static_cast<std::size_t>(fu)];
  }
  return sum / static_cast<double>(points.cols());
}

double CostEvaluator::class_score(MaskClass cls, const Mat3& R, const Vec3& t) const {
  return cls == MaskClass::kLane ? mean_height(lane_points_, lane_height_, R, t)
                                 : mean_height(pole_points_, pole_height_, R, t);
}

double CostEvaluator::evaluate(const Mat3& R, const Vec3& t) const {
  return mean_height(pole_points_, pole_height_, R, t) +
         mean_height(lane_points_, lane_height_, R, t);
}

}  // namespace linecalib
