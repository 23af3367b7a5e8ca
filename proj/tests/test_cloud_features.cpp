#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "linecalib/cloud_features.hpp"
#include "linecalib/error.hpp"
#include "linecalib/synthetic.hpp"
#include "support.hpp"

namespace linecalib {
namespace {

using test::Rng;
using test::uniform;

ErrorCode error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kEmptyList;  // sentinel: nothing thrown
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0));
}

TEST(GroundPlane, RecoversPlaneUnderUniformNoise) {
  Rng rng(1);
  PointCloud c;
  for (int i = 0; i < 1900; ++i) c.points.push_back({Vec3(uniform(rng, 0, 40), uniform(rng, -15, 15), -1.7), 0.1});
  for (int i = 0; i < 100; ++i) {
    c.points.push_back({Vec3(uniform(rng, 0, 40), uniform(rng, -15, 15), uniform(rng, -3, 3)), 0.1});
  }
  const GroundSegmentation seg = fit_ground_plane(c, GroundConfig{}, 7);
  EXPECT_LT(angle_between(seg.plane.normal, Vec3::UnitZ()), deg2rad(0.5));
  EXPECT_NEAR(seg.plane.offset, 1.7, 0.02);
  EXPECT_GT(seg.plane.normal.z(), 0.0);
}

TEST(GroundPlane, ExactPlaneKeepsEveryPlanePoint) {
  Rng rng(2);
  PointCloud c;
  for (int i = 0; i < 1500; ++i) c.points.push_back({Vec3(uniform(rng, 0, 40), uniform(rng, -15, 15), -1.7), 0.1});
  for (int i = 0; i < 300; ++i) c.points.push_back({Vec3(uniform(rng, 0, 40), uniform(rng, -15, 15), 1.0), 0.1});
  const GroundSegmentation seg = fit_ground_plane(c, GroundConfig{}, 3);
  ASSERT_EQ(seg.ground_indices.size(), 1500u);
  for (std::size_t i = 0; i < 1500; ++i) EXPECT_EQ(seg.ground_indices[i], i);
}

TEST(GroundPlane, PureNoiseHasNoPlane) {
  Rng rng(3);
  PointCloud c;
  for (int i = 0; i < 2000; ++i) {
    c.points.push_back({Vec3(uniform(rng, -30, 30), uniform(rng, -30, 30), uniform(rng, -30, 30)), 0.1});
  }
  EXPECT_EQ(error_code([&] { fit_ground_plane(c, GroundConfig{}, 1); }), ErrorCode::kNoGroundPlane);
}

// Asphalt at intensity 0.1 with two painted strips at 0.9, on the plane z = -1.7.
struct StripScene {
  PointCloud cloud;
  std::vector<std::size_t> strip;
};

StripScene strip_scene(std::uint64_t seed) {
  Rng rng(seed);
  StripScene s;
  for (int i = 0; i < 2000; ++i) {
    const double y = uniform(rng, -10, 10);
    if (std::abs(y - 1.8) < 0.1 || std::abs(y + 1.8) < 0.1) continue;
    s.cloud.points.push_back({Vec3(uniform(rng, 3, 40), y, -1.7), 0.1});
  }
  for (double yc : {-1.8, 1.8}) {
    for (int i = 0; i < 150; ++i) {
      s.strip.push_back(s.cloud.size());
      s.cloud.points.push_back({Vec3(uniform(rng, 3, 40), yc + uniform(rng, -0.075, 0.075), -1.7), 0.9});
    }
  }
  return s;
}

TEST(LanePoints, ExactlyTheStripsSurvive) {
  const StripScene s = strip_scene(4);
  const GroundSegmentation seg = fit_ground_plane(s.cloud, GroundConfig{}, 1);
  std::vector<std::size_t> lanes = extract_lane_points(seg, s.cloud, LaneConfig{}, LineRansacConfig{}, 2);
  std::sort(lanes.begin(), lanes.end());
  EXPECT_EQ(lanes, s.strip);
}

TEST(LanePoints, UniformIntensityHasNoLanes) {
  StripScene s = strip_scene(5);
  for (auto& p : s.cloud.points) p.intensity = 0.4;
  const GroundSegmentation seg = fit_ground_plane(s.cloud, GroundConfig{}, 1);
  EXPECT_EQ(error_code([&] { extract_lane_points(seg, s.cloud, LaneConfig{}, LineRansacConfig{}, 2); }),
            ErrorCode::kNoLanePoints);
}

TEST(LanePoints, IsolatedBrightPointIsDropped) {
  StripScene s = strip_scene(6);
  const std::size_t outlier = s.cloud.size();
  s.cloud.points.push_back({Vec3(20, 0.0, -1.7), 0.95});  // 1.8 m from both strips
  const GroundSegmentation seg = fit_ground_plane(s.cloud, GroundConfig{}, 1);
  ASSERT_TRUE(std::count(seg.ground_indices.begin(), seg.ground_indices.end(), outlier));
  const auto lanes = extract_lane_points(seg, s.cloud, LaneConfig{}, LineRansacConfig{}, 2);
  EXPECT_EQ(std::count(lanes.begin(), lanes.end(), outlier), 0);
  EXPECT_EQ(lanes.size(), s.strip.size());
}

TEST(LineRansac, CollinearPoints) {
  std::vector<Vec3> pts;
  const Vec3 d = Vec3(1, 2, -0.5).normalized();
  for (int i = 0; i < 100; ++i) pts.push_back(Vec3(1, 2, 3) + 0.3 * i * d);
  const auto lines = ransac_line3d(pts, 0.15, 9);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_LT(angle_between(lines[0].line.direction, d), 1e-6);
  EXPECT_EQ(lines[0].inliers.size(), 100u);
}

TEST(LineRansac, DashedLanesMergeIntoTwoLines) {
  SceneSpec spec = canonical_scene(3);
  spec.lane_dashed = true;
  const SyntheticFrame frame = generate(spec);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
    if (frame.labels[i] == SurfaceLabel::kLane) pts.push_back(frame.cloud.points[i].position);
  }
  const auto lines = ransac_line3d(pts, 0.15, 4);
  EXPECT_EQ(lines.size(), 2u);
  const TrueLines tl = true_lines(spec);
  for (const auto& l : lines) EXPECT_LT(angle_between(l.line.direction, tl.lanes[0].direction), deg2rad(1.0));
}

TEST(LineRansac, CollinearWithScatter) {
  Rng rng(12);
  std::vector<Vec3> pts;
  const Vec3 d = Vec3(1, 0.2, 0.05).normalized();
  for (int i = 0; i < 140; ++i) pts.push_back(Vec3(0, 0, -1.7) + uniform(rng, 0, 40) * d);
  for (int i = 0; i < 60; ++i) pts.push_back(Vec3(uniform(rng, 0, 40), uniform(rng, -10, 10), uniform(rng, -2, 2)));
  const auto lines = ransac_line3d(pts, 0.15, 5);
  ASSERT_FALSE(lines.empty());
  EXPECT_LT(angle_between(lines[0].line.direction, d), deg2rad(0.5));
}

TEST(LineRansac, TooFewPointsGiveNothing) {
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  EXPECT_TRUE(ransac_line3d(pts, 0.15, 1).empty());
}

TEST(GroundFrame, IdentityCase) {
  Plane3D plane;
  const GroundParallelFrame f = ground_parallel_rotation(plane, Line3D::make(Vec3::Zero(), Vec3::UnitX()));
  EXPECT_LT((f.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GroundFrame, TiltedNormalMapsToZ) {
  Plane3D plane;
  plane.normal = Vec3(0, std::sin(deg2rad(5.0)), std::cos(deg2rad(5.0)));
  plane.offset = 1.7;
  const GroundParallelFrame f = ground_parallel_rotation(plane, Line3D::make(Vec3::Zero(), Vec3(1, 0.1, 0)));
  EXPECT_LT((f.rotation * plane.normal - Vec3::UnitZ()).norm(), 1e-9);
  EXPECT_TRUE(is_rotation(f.rotation, 1e-12));
  const Vec3 x = f.rotation * Vec3(1, 0.1, 0);
  EXPECT_NEAR(x.y(), 0.0, 1e-12);
  EXPECT_GT(x.x(), 0.0);
}

TEST(GroundFrame, LaneAlongNormalIsDegenerate) {
  Plane3D plane;
  EXPECT_EQ(error_code([&] { ground_parallel_rotation(plane, Line3D::make(Vec3::Zero(), Vec3(0.05, 0, 1))); }),
            ErrorCode::kDegenerateFrame);
}

// Ground at z = -1.7 plus vertical poles sampled from the ground up to their tops.
struct PoleScene {
  PointCloud cloud;
  GroundSegmentation seg;
  std::vector<std::vector<std::size_t>> poles;
};

PoleScene pole_scene(const std::vector<Vec3>& poles /* x, y, height */) {
  Rng rng(21);
  PoleScene s;
  for (int i = 0; i < 1000; ++i) {
    s.seg.ground_indices.push_back(s.cloud.size());
    s.cloud.points.push_back({Vec3(uniform(rng, 0, 40), uniform(rng, -15, 15), -1.7), 0.1});
  }
  for (const Vec3& p : poles) {
    s.poles.emplace_back();
    for (int i = 0; i < 80; ++i) {
      const double a = uniform(rng, 0, 2 * kPi);
      s.seg.object_indices.push_back(s.cloud.size());
      s.poles.back().push_back(s.cloud.size());
      s.cloud.points.push_back(
          {Vec3(p.x() + 0.1 * std::cos(a), p.y() + 0.1 * std::sin(a), -1.55 + uniform(rng, 0, p.z())), 0.3});
    }
  }
  s.seg.plane.offset = 1.7;
  return s;
}

TEST(PolePoints, SinglePoleAboveH0) {
  const PoleScene s = pole_scene({Vec3(10, 5, 6)});
  const auto pts = extract_pole_points(s.seg, s.cloud, GroundParallelFrame{}, PoleConfig{});
  std::vector<std::size_t> expected;
  for (std::size_t i : s.poles[0]) {
    if (s.cloud.points[i].position.z() > -1.0) expected.push_back(i);
  }
  EXPECT_EQ(pts, expected);
}

TEST(PolePoints, CarsAreBelowH1) {
  const PoleScene s = pole_scene({Vec3(10, 5, 3.3), Vec3(20, -5, 3.0)});  // tops below 1.75 m over the sensor
  EXPECT_EQ(error_code([&] { extract_pole_points(s.seg, s.cloud, GroundParallelFrame{}, PoleConfig{}); }),
            ErrorCode::kNoPolePoints);
}

TEST(PolePoints, OutsideTheGridIsExcluded) {
  const PoleScene s = pole_scene({Vec3(10, 5, 6), Vec3(120, 0, 6)});
  const auto pts = extract_pole_points(s.seg, s.cloud, GroundParallelFrame{}, PoleConfig{});
  for (std::size_t i : s.poles[1]) EXPECT_EQ(std::count(pts.begin(), pts.end(), i), 0);
  EXPECT_FALSE(pts.empty());
}

TEST(PolePoints, ClustersSeparatePoles) {
  const PoleScene s = pole_scene({Vec3(10, 5, 6), Vec3(14, -6, 6)});
  const auto pts = extract_pole_points(s.seg, s.cloud, GroundParallelFrame{}, PoleConfig{});
  const auto clusters = cluster_pole_points(pts, s.cloud, GroundParallelFrame{}, GridConfig{});
  EXPECT_EQ(clusters.size(), 2u);
}

class CanonicalExtraction : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(CanonicalExtraction, TwoLanesAndTwoPoles) {
  const SceneSpec spec = canonical_scene(GetParam());
  const SyntheticFrame frame = generate(spec);
  const FeatureSetCloud f = extract_cloud_features(frame.cloud, CloudFeatureConfig{}, 42);
  EXPECT_EQ(f.lane_lines.size(), 2u);
  EXPECT_EQ(f.pole_lines.size(), 2u);
  ASSERT_GE(f.lane_lines.size(), 2u);
  const Vec3 g0 = f.frame.to_ground(f.lane_lines[0].line.direction);
  const Vec3 g1 = f.frame.to_ground(f.lane_lines[1].line.direction);
  EXPECT_LT(angle_between(g0, g1), deg2rad(2.0));
  for (const auto& p : f.pole_lines) EXPECT_GT(f.frame.to_ground(p.line.direction).z(), 0.99);
  // The frame agrees with the analytic one.
  const TrueLines tl = true_lines(spec);
  EXPECT_LT(angle_between(f.frame.rotation.row(2).transpose(), tl.ground.normal), deg2rad(0.5));
}

INSTANTIATE_TEST_SUITE_P(Seeds, CanonicalExtraction, ::testing::Values(1, 2, 3));

TEST(Extraction, SceneWithoutPolesFails) {
  SceneSpec spec = canonical_scene(4);
  spec.poles.clear();
  const SyntheticFrame frame = generate(spec);
  EXPECT_EQ(error_code([&] { extract_cloud_features(frame.cloud, CloudFeatureConfig{}, 42); }),
            ErrorCode::kInsufficientLines);
}

TEST(Extraction, TooSmallCloudIsRejected) {
  PointCloud c;
  c.points.resize(999);
  EXPECT_EQ(error_code([&] { extract_cloud_features(c, CloudFeatureConfig{}, 1); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace linecalib
