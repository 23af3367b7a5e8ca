#include "linecalib/calibration.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "linecalib/error.hpp"
#include "linecalib/text_io.hpp"

namespace linecalib {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto in_stage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(stage, e);
  }
}

std::string vec_text(const Vec3& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

}  // namespace

CoarseResult coarse_calibrate(const std::vector<Line3D>& cloud_lanes,
                              const std::vector<Line3D>& cloud_poles,
                              const GroundParallelFrame& frame, const PrincipalLines& image,
                              const CostEvaluator& ev) {
  if (cloud_lanes.size() < 2 || cloud_poles.empty()) {
    throw Error(ErrorCode::kInsufficientLines, "coarse solve needs 2 cloud lanes and 1 pole");
  }
  CoarseResult result;
  bool found = false;
  for (std::size_t a = 0; a < cloud_lanes.size(); ++a) {
    for (std::size_t b = 0; b < cloud_lanes.size(); ++b) {
      if (a == b) continue;
      for (std::size_t c = 0; c < cloud_poles.size(); ++c) {
        const std::size_t assignment = result.assignments++;
        P3LProblem problem{image.lane1,    image.lane2,    image.pole, cloud_lanes[a],
                           cloud_lanes[b], cloud_poles[c], frame,      ev.intrinsics()};
        std::vector<Extrinsic> solutions;
        try {
          solutions = solve_p3l(problem);
        } catch (const Error&) {
          ++result.failed_assignments;
          continue;
        }
        for (const Extrinsic& e : solutions) {
          const double score = ev(e);
          result.candidates.push_back({assignment, a, b, c, e, score});
          if (score > result.cost) {
            result.cost = score;
            result.extrinsic = e;
            found = true;
          }
        }
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::kNoValidCandidate,
                std::to_string(result.candidates.size()) + " candidates from " +
                    std::to_string(result.assignments) + " assignments, none scores above zero");
  }
  return result;
}

CoarseResult coarse_calibrate(const FeatureSetCloud& cloud, const FeatureSetImage& image,
                              const CostEvaluator& ev) {
  std::vector<Line3D> lanes, poles;
  for (const auto& f : cloud.lane_lines) lanes.push_back(f.line);
  for (const auto& f : cloud.pole_lines) poles.push_back(f.line);
  return coarse_calibrate(lanes, poles, cloud.frame, select_principal_lines(image), ev);
}

RefineResult refine(const Extrinsic& initial, const CostEvaluator& ev, const RefinementConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> azimuth(-kPi, kPi);

  RefineResult out;
  Mat3 best_R = initial.rotation();
  Vec3 best_t = initial.t;
  out.initial_cost = out.cost = ev.evaluate(best_R, best_t);
  out.extrinsic = initial;

  const double theta0 = deg2rad(cfg.theta_range_deg) * cfg.rot_scale;
  const double stop_below = cfg.eta_min * (1.0 - 1e-9);
  double eta = cfg.eta;
  int rejections = 0;
  bool moved = false;
  while (eta >= stop_below && out.samples < cfg.max_samples) {
    const Vec3 dt(unit(rng) * eta * cfg.t_range, unit(rng) * eta * cfg.t_range,
                  unit(rng) * eta * cfg.t_range);
    const double z = unit(rng);
    const double phi = azimuth(rng);
    const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 axis(ring * std::cos(phi), ring * std::sin(phi), z);
    const double angle = unit(rng) * eta * theta0;
    ++out.samples;

    const Mat3 R = angle_axis_to_matrix(axis * angle) * best_R;
    const Vec3 t = best_t + dt;
    const double c = ev.evaluate(R, t);
    if (c > out.cost) {
      best_R = R;
      best_t = t;
      out.cost = c;
      ++out.accepted;
      out.accepted_costs.push_back(c);
      rejections = 0;
      moved = true;
    } else if (++rejections >= cfg.patience) {
      eta *= cfg.decay;
      rejections = 0;
    }
  }
  out.final_eta = eta;
  if (moved) {
    // Re-orthonormalize the accumulated product before converting.
    Eigen::JacobiSVD<Mat3> svd(best_R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.extrinsic = Extrinsic::from_rotation(svd.matrixU() * svd.matrixV().transpose(), best_t);
  }
  return out;
}

FrameFeatures extract_frame_features(const PointCloud& cloud, SemanticMask lane_mask,
                                     SemanticMask pole_mask, const Intrinsics& intrinsics,
                                     const PipelineConfig& cfg) {
  return in_stage(Stage::kExtraction, [&] {
    FeatureSetCloud cloud_features = extract_cloud_features(cloud, cfg.cloud, cfg.seed);
    FeatureSetImage image_features =
        extract_image_features(std::move(lane_mask), std::move(pole_mask), cfg.image);
    CostEvaluator ev(intrinsics, image_features.lane_height, image_features.pole_height,
                     cloud_features.lane_points, cloud_features.pole_points);
    return FrameFeatures{std::move(cloud_features), std::move(image_features), std::move(ev)};
  });
}

namespace {

void fill_extraction_report(const PointCloud& cloud, const FrameFeatures& f,
                            CalibrationReport& report) {
  report.cloud_points = cloud.size();
  report.ground_points = f.cloud.ground.ground_indices.size();
  report.lane_points = f.cloud.lane_points.size();
  report.pole_points = f.cloud.pole_points.size();
  report.cloud_lane_lines = f.cloud.lane_lines.size();
  report.cloud_pole_lines = f.cloud.pole_lines.size();
  report.image_lane_lines = f.image.lane_lines.size();
  report.image_pole_lines = f.image.pole_lines.size();
}

void check_masks(const SemanticMask& lane, const SemanticMask& pole, const Intrinsics& k) {
  in_stage(Stage::kParse, [&] {
    k.validate();
    for (const SemanticMask* m : {&lane, &pole}) {
      if (m->width != k.width || m->height != k.height) {
        throw Error(ErrorCode::kDimensionMismatch, "mask size differs from the camera");
      }
    }
    return 0;
  });
}

RefinementConfig refine_config(const PipelineConfig& cfg) {
  RefinementConfig r = cfg.refine;
  r.seed = derive_seed(cfg.seed, 7);
  return r;
}

}  // namespace

CalibrationResult calibrate(const PointCloud& cloud, SemanticMask lane_mask,
                            SemanticMask pole_mask, const Intrinsics& intrinsics,
                            const PipelineConfig& cfg, PipelineMode mode) {
  const auto start = Clock::now();
  check_masks(lane_mask, pole_mask, intrinsics);
  CalibrationResult result;
  auto& report = result.report;

  const FrameFeatures f =
      extract_frame_features(cloud, std::move(lane_mask), std::move(pole_mask), intrinsics, cfg);
  fill_extraction_report(cloud, f, report);
  report.timings.extraction_s = seconds_since(start);

  const auto coarse_start = Clock::now();
  const CoarseResult coarse =
      in_stage(Stage::kCoarse, [&] { return coarse_calibrate(f.cloud, f.image, f.evaluator); });
  report.assignments = coarse.assignments;
  report.candidates = coarse.candidates.size();
  report.has_coarse = true;
  report.coarse = coarse.extrinsic;
  report.coarse_cost = coarse.cost;
  report.timings.coarse_s = seconds_since(coarse_start);
  result.extrinsic = coarse.extrinsic;

  if (mode == PipelineMode::kFull) {
    const auto refine_start = Clock::now();
    const RefineResult refined = in_stage(
        Stage::kRefine, [&] { return refine(coarse.extrinsic, f.evaluator, refine_config(cfg)); });
    report.has_refined = true;
    report.refined = refined.extrinsic;
    report.refined_cost = refined.cost;
    report.refine_samples = refined.samples;
    report.refine_accepted = refined.accepted;
    report.timings.refine_s = seconds_since(refine_start);
    result.extrinsic = refined.extrinsic;
  }
  report.timings.total_s = seconds_since(start);
  return result;
}

CalibrationResult refine_from(const PointCloud& cloud, SemanticMask lane_mask,
                              SemanticMask pole_mask, const Intrinsics& intrinsics,
                              const Extrinsic& initial, const PipelineConfig& cfg) {
  const auto start = Clock::now();
  check_masks(lane_mask, pole_mask, intrinsics);
  CalibrationResult result;
  auto& report = result.report;
  const FrameFeatures f =
      extract_frame_features(cloud, std::move(lane_mask), std::move(pole_mask), intrinsics, cfg);
  fill_extraction_report(cloud, f, report);
  report.timings.extraction_s = seconds_since(start);

  const auto refine_start = Clock::now();
  const RefineResult refined =
      in_stage(Stage::kRefine, [&] { return refine(initial, f.evaluator, refine_config(cfg)); });
  report.has_refined = true;
  report.refined = refined.extrinsic;
  report.refined_cost = refined.cost;
  report.refine_samples = refined.samples;
  report.refine_accepted = refined.accepted;
  report.timings.refine_s = seconds_since(refine_start);
  report.timings.total_s = seconds_since(start);
  result.extrinsic = refined.extrinsic;
  return result;
}

std::string format_report(const CalibrationReport& r, bool with_timings) {
  std::ostringstream out;
  out << "# calibration report\n";
  out << "cloud_points = " << r.cloud_points << "\n";
  out << "ground_points = " << r.ground_points << "\n";
  out << "lane_points = " << r.lane_points << "\n";
  out << "pole_points = " << r.pole_points << "\n";
  out << "cloud_lane_lines = " << r.cloud_lane_lines << "\n";
  out << "cloud_pole_lines = " << r.cloud_pole_lines << "\n";
  out << "image_lane_lines = " << r.image_lane_lines << "\n";
  out << "image_pole_lines = " << r.image_pole_lines << "\n";
  if (r.has_coarse) {
    out << "coarse_assignments = " << r.assignments << "\n";
    out << "coarse_candidates = " << r.candidates << "\n";
    out << "coarse_cost = " << format_double(r.coarse_cost) << "\n";
    out << "coarse_r = " << vec_text(r.coarse.r) << "\n";
    out << "coarse_t = " << vec_text(r.coarse.t) << "\n";
  }
  if (r.has_refined) {
    out << "refine_samples = " << r.refine_samples << "\n";
    out << "refine_accepted = " << r.refine_accepted << "\n";
    out << "refined_cost = " << format_double(r.refined_cost) << "\n";
    out << "refined_r = " << vec_text(r.refined.r) << "\n";
    out << "refined_t = " << vec_text(r.refined.t) << "\n";
  }
  if (with_timings) {
    char buf[64];
    auto line = [&](const char* key, double v) {
      std::snprintf(buf, sizeof(buf), "%.4f", v);
      out << key << " = " << buf << "\n";
    };
    line("time_extraction_s", r.timings.extraction_s);
    line("time_coarse_s", r.timings.coarse_s);
    line("time_refine_s", r.timings.refine_s);
    line("time_total_s", r.timings.total_s);
  }
  return out.str();
}

}  // namespace linecalib
