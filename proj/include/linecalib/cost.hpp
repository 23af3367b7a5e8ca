#pragma once

#include <vector>

#include <Eigen/Core>

#include "linecalib/geometry.hpp"
#include "linecalib/image_features.hpp"

namespace linecalib {

/// Semantic alignment score of an extrinsic: for lanes and poles, the mean
/// height-map value at the pixels the class points project to, summed over
/// both classes. Points behind the camera or outside the image contribute 0,
/// so the score lies in [0, 2]. Immutable and shareable across threads.
class CostEvaluator {
 public:
  /// Throws Error(kInvalidArgument) on an empty point set and
  /// Error(kDimensionMismatch) when a height map differs from the camera size.
  CostEvaluator(const Intrinsics& intrinsics, HeightMap lane_height, HeightMap pole_height,
                const std::vector<Vec3>& lane_points, const std::vector<Vec3>& pole_points);

  double operator()(const Extrinsic& e) const { return evaluate(e.rotation(), e.t); }
  double evaluate(const Mat3& R, const Vec3& t) const;

  /// Mean height of one class; the cost is lane + pole.
  double class_score(MaskClass cls, const Mat3& R, const Vec3& t) const;

  const Intrinsics& intrinsics() const { return intrinsics_; }
  std::size_t lane_count() const { return static_cast<std::size_t>(lane_points_.cols()); }
  std::size_t pole_count() const { return static_cast<std::size_t>(pole_points_.cols()); }

 private:
  double mean_height(const Eigen::Matrix3Xd& points, const HeightMap& map, const Mat3& R,
                     const Vec3& t) const;

  Intrinsics intrinsics_;
  HeightMap lane_height_;
  HeightMap pole_height_;
  Eigen::Matrix3Xd lane_points_;
  Eigen::Matrix3Xd pole_points_;
};

inline double cost(const Extrinsic& e, const CostEvaluator& ev) { return ev(e); }

}  // namespace linecalib
