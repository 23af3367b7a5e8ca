#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "linecalib/calibration.hpp"
#include "linecalib/error.hpp"
#include "linecalib/evaluation.hpp"
#include "linecalib/p3l.hpp"
#include "support.hpp"

namespace linecalib {
namespace {

using test::Rng;

P3LProblem problem_from(const TrueLines& tl, const Intrinsics& k) {
  return {tl.lane_images[0], tl.lane_images[1], tl.pole_images[0], tl.lanes[0], tl.lanes[1], tl.poles[0],
          tl.frame, k};
}

bool near(const Extrinsic& a, const Extrinsic& b, double tol_t, double tol_r) {
  return translation_error(a, b) < tol_t && rotation_error(a, b) < tol_r;
}

FrameFeatures features_of(const SyntheticFrame& f, const PipelineConfig& cfg = {}) {
  return extract_frame_features(f.cloud, f.lane_mask, f.pole_mask, f.intrinsics, cfg);
}

Extrinsic offset_by(const Extrinsic& e, double dt, double dtheta, Rng& rng) {
  Extrinsic out;
  out.t = e.t + dt * test::random_unit(rng);
  out.r = matrix_to_angle_axis(angle_axis_to_matrix(dtheta * test::random_unit(rng)) * e.rotation());
  return out;
}

// ------------------------------------------------------------------ cost

TEST(Cost, CompactMasksScoreNearTheMaximum) {
  Intrinsics k;
  k.fx = k.fy = 100;
  k.cx = k.cy = 50;
  k.width = k.height = 100;
  // Three-pixel-wide strips: the centre column is two pixels from the complement.
  SemanticMask lane(100, 100, MaskClass::kLane), pole(100, 100, MaskClass::kPole);
  for (int v = 10; v < 90; ++v) {
    for (int u = 29; u <= 31; ++u) lane.set(u, v);
    for (int u = 69; u <= 71; ++u) pole.set(u, v);
  }
  std::vector<Vec3> lane_pts, pole_pts;
  for (int v = 20; v < 80; ++v) {
    lane_pts.emplace_back((30 - k.cx) / k.fx * 10, (v - k.cy) / k.fy * 10, 10);
    pole_pts.emplace_back((70 - k.cx) / k.fx * 10, (v - k.cy) / k.fy * 10, 10);
  }
  const CostEvaluator ev(k, idt_height_map(lane, {}), idt_height_map(pole, {}), lane_pts, pole_pts);
  EXPECT_GT(ev(Extrinsic::identity()), 1.9);
  EXPECT_NEAR(ev(Extrinsic::identity()), 2 * 0.98 * 0.98, 1e-12);

  Extrinsic behind;
  behind.t = Vec3(0, 0, -20);
  EXPECT_EQ(ev(behind), 0.0);
}

TEST(Cost, RejectsEmptyPointsAndMismatchedMaps) {
  const Intrinsics k = test::small_intrinsics();
  SemanticMask m(k.width, k.height, MaskClass::kLane);
  m.set(3, 3);
  const HeightMap h = idt_height_map(m, {});
  EXPECT_THROW(CostEvaluator(k, h, h, {}, {Vec3(0, 0, 1)}), Error);
  SemanticMask small(10, 10, MaskClass::kPole);
  small.set(1, 1);
  try {
    CostEvaluator(k, h, idt_height_map(small, {}), {Vec3(0, 0, 1)}, {Vec3(0, 0, 1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Cost, TruthBeatsPerturbations) {
  const SyntheticFrame frame = generate(canonical_scene(4));
  const CostEvaluator ev = test::labelled_evaluator(frame);
  const double at_truth = ev(frame.truth);
  EXPECT_GT(at_truth, 1.5);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Extrinsic p = offset_by(frame.truth, 0.5, deg2rad(3.0), rng);
    EXPECT_LT(ev(p), at_truth) << "perturbation " << i;
  }
}

// ------------------------------------------------------------------- p3l

TEST(P3L, RecoversTruthFromExactLines) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SceneSpec spec = canonical_scene(seed);
    const std::vector<Extrinsic> cands = solve_p3l(problem_from(true_lines(spec), spec.intrinsics));
    ASSERT_FALSE(cands.empty());
    ASSERT_LE(cands.size(), 4u);
    const bool found = std::any_of(cands.begin(), cands.end(), [&](const Extrinsic& c) {
      return near(c, spec.extrinsic, 1e-6, 1e-6);
    });
    EXPECT_TRUE(found) << "seed " << seed;
  }
}

TEST(P3L, InvariantUnderLaneRelabeling) {
  SceneSpec spec = canonical_scene(1);
  spec.ground_roll_deg = spec.ground_pitch_deg = spec.road_yaw_deg = 0.0;
  spec.lane_offset = 0.0;
  spec.extrinsic = nominal_extrinsic();
  const P3LProblem a = problem_from(true_lines(spec), spec.intrinsics);
  P3LProblem b = a;
  std::swap(b.image_lane1, b.image_lane2);
  std::swap(b.cloud_lane1, b.cloud_lane2);
  const auto ca = solve_p3l(a), cb = solve_p3l(b);
  ASSERT_EQ(ca.size(), cb.size());
  for (const Extrinsic& x : ca) {
    const bool matched = std::any_of(cb.begin(), cb.end(), [&](const Extrinsic& y) {
      return near(x, y, 1e-9, 1e-9);
    });
    EXPECT_TRUE(matched);
  }
}

TEST(P3L, CoincidentLanesAreDegenerate) {
  const SceneSpec spec = canonical_scene(2);
  P3LProblem p = problem_from(true_lines(spec), spec.intrinsics);
  p.image_lane2 = p.image_lane1;
  try {
    solve_p3l(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateNormals);
  }
}

TEST(P3L, RejectsNonVerticalPole) {
  const SceneSpec spec = canonical_scene(2);
  P3LProblem p = problem_from(true_lines(spec), spec.intrinsics);
  p.cloud_pole = p.cloud_lane1;
  EXPECT_THROW(p.validate(), Error);
}

// ---------------------------------------------------------------- coarse

TEST(Coarse, CanonicalSceneEnumeratesFourAssignments) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SyntheticFrame frame = generate(canonical_scene(seed));
    const FrameFeatures f = features_of(frame);
    ASSERT_EQ(f.cloud.lane_lines.size(), 2u);
    ASSERT_EQ(f.cloud.pole_lines.size(), 2u);
    const CoarseResult r = coarse_calibrate(f.cloud, f.image, f.evaluator);
    EXPECT_EQ(r.assignments, 4u);
    EXPECT_TRUE(near(r.extrinsic, frame.truth, 0.5, deg2rad(3.0)))
        << "seed " << seed << ": " << translation_error(r.extrinsic, frame.truth) << " m, "
        << rad2deg(rotation_error(r.extrinsic, frame.truth)) << " deg";

    // The winning lane assignment beats its swapped counterpart.
    const auto best = std::find_if(r.candidates.begin(), r.candidates.end(),
                                   [&](const CoarseCandidate& c) { return c.cost == r.cost; });
    ASSERT_NE(best, r.candidates.end());
    for (const CoarseCandidate& c : r.candidates) {
      if (c.lane_a == best->lane_b && c.lane_b == best->lane_a && c.pole == best->pole) {
        EXPECT_LT(c.cost, r.cost);
      }
    }
  }
}

TEST(Coarse, OnePoleGivesTwoAssignments) {
  const SyntheticFrame frame = generate(canonical_scene(1));
  const FrameFeatures f = features_of(frame);
  std::vector<Line3D> lanes, poles;
  for (const LineFit& l : f.cloud.lane_lines) lanes.push_back(l.line);
  poles.push_back(f.cloud.pole_lines.front().line);
  const CoarseResult r =
      coarse_calibrate(lanes, poles, f.cloud.frame, select_principal_lines(f.image), f.evaluator);
  EXPECT_EQ(r.assignments, 2u);
}

// ---------------------------------------------------------------- refine

TEST(Refine, NoDriftFromTruth) {
  SceneSpec spec = canonical_scene(5);
  spec.noise_sigma = 0.0;
  const SyntheticFrame frame = generate(spec);
  const FrameFeatures f = features_of(frame);
  const RefineResult r = refine(frame.truth, f.evaluator, RefinementConfig{});
  EXPECT_LE(translation_error(r.extrinsic, frame.truth), 0.02);
  EXPECT_LE(rotation_error(r.extrinsic, frame.truth), deg2rad(0.1));
  EXPECT_GE(r.cost, r.initial_cost);
}

TEST(Refine, RecoversFromModerateOffset) {
  Rng rng(31);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SyntheticFrame frame = generate(canonical_scene(seed));
    const FrameFeatures f = features_of(frame);
    const Extrinsic start = offset_by(frame.truth, 0.3, deg2rad(2.0), rng);
    const RefineResult r = refine(start, f.evaluator, RefinementConfig{});
    EXPECT_LT(translation_error(r.extrinsic, frame.truth), 0.05) << "seed " << seed;
    EXPECT_LT(rotation_error(r.extrinsic, frame.truth), deg2rad(0.5)) << "seed " << seed;
  }
}

TEST(Refine, RespectsBudgetAndIsSeeded) {
  const SyntheticFrame frame = generate(test::small_scene(3));
  const CostEvaluator ev = test::labelled_evaluator(frame);
  Rng rng(4);
  const Extrinsic start = offset_by(frame.truth, 0.2, deg2rad(1.0), rng);
  RefinementConfig cfg;
  cfg.max_samples = 300;
  const RefineResult a = refine(start, ev, cfg), b = refine(start, ev, cfg);
  EXPECT_LE(a.samples, 300);
  EXPECT_EQ(a.extrinsic.r, b.extrinsic.r);
  EXPECT_EQ(a.extrinsic.t, b.extrinsic.t);
  cfg.decay = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

// -------------------------------------------------------------- pipeline

TEST(Calibrate, CanonicalSceneEndToEnd) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SyntheticFrame frame = generate(canonical_scene(seed));
    const CalibrationResult r =
        calibrate(frame.cloud, frame.lane_mask, frame.pole_mask, frame.intrinsics, PipelineConfig{});
    EXPECT_LT(translation_error(r.extrinsic, frame.truth), 0.05) << "seed " << seed;
    EXPECT_LT(rotation_error(r.extrinsic, frame.truth), deg2rad(0.5)) << "seed " << seed;
    EXPECT_TRUE(r.report.has_coarse);
    EXPECT_TRUE(r.report.has_refined);
    EXPECT_EQ(r.report.assignments, 4u);
    EXPECT_GE(r.report.refined_cost, r.report.coarse_cost);
  }
}

TEST(Calibrate, MissingPolesFailAtExtraction) {
  SceneSpec spec = canonical_scene(2);
  spec.poles.clear();
  const SyntheticFrame frame = generate(spec);
  try {
    calibrate(frame.cloud, frame.lane_mask, frame.pole_mask, frame.intrinsics, PipelineConfig{});
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage(), Stage::kExtraction);
  }
}

TEST(Calibrate, CoarseOnlyModeSkipsRefinement) {
  const SyntheticFrame frame = generate(canonical_scene(1));
  const CalibrationResult r = calibrate(frame.cloud, frame.lane_mask, frame.pole_mask, frame.intrinsics,
                                        PipelineConfig{}, PipelineMode::kCoarseOnly);
  EXPECT_TRUE(r.report.has_coarse);
  EXPECT_FALSE(r.report.has_refined);
  EXPECT_EQ(r.extrinsic.r, r.report.coarse.r);
}

TEST(Calibrate, DeterministicReport) {
  const SyntheticFrame frame = generate(canonical_scene(6));
  const PipelineConfig cfg;
  const CalibrationResult a = calibrate(frame.cloud, frame.lane_mask, frame.pole_mask, frame.intrinsics, cfg);
  const CalibrationResult b = calibrate(frame.cloud, frame.lane_mask, frame.pole_mask, frame.intrinsics, cfg);
  EXPECT_EQ(format_report(a.report), format_report(b.report));
  EXPECT_EQ(a.extrinsic.r, b.extrinsic.r);
  EXPECT_EQ(a.extrinsic.t, b.extrinsic.t);
  const std::string text = format_report(a.report);
  for (const char* key : {"coarse_assignments", "coarse_cost", "refined_cost", "cloud_lane_lines"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  EXPECT_EQ(text.find("time"), std::string::npos);
  EXPECT_NE(format_report(a.report, true).find("total"), std::string::npos);
}

}  // namespace
}  // namespace linecalib
