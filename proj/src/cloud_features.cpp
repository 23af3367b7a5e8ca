#include "linecalib/cloud_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "linecalib/error.hpp"

namespace linecalib {

namespace {

struct PcaFit {
  Vec3 centroid;
  Vec3 major;  // direction of largest spread
  Vec3 minor;  // direction of smallest spread
};

template <typename PointAt>
PcaFit pca(std::size_t n, PointAt point_at) {
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) centroid += point_at(i);
  centroid /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = point_at(i) - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  return {centroid, eig.eigenvectors().col(2), eig.eigenvectors().col(0)};
}

struct GridIndex {
  const GridConfig& grid;
  int nx;
  int ny;

  explicit GridIndex(const GridConfig& g)
      : grid(g),
        nx(static_cast<int>(std::ceil((g.x_max - g.x_min) / g.cell))),
        ny(static_cast<int>(std::ceil((g.y_max - g.y_min) / g.cell))) {}

  // Linear cell id, or -1 outside the grid.
  int cell_of(const Vec3& p_ground) const {
    const double x = p_ground.x(), y = p_ground.y();
    if (!(x >= grid.x_min && x < grid.x_max && y >= grid.y_min && y < grid.y_max)) return -1;
    const int ix = std::min(nx - 1, static_cast<int>((x - grid.x_min) / grid.cell));
    const int iy = std::min(ny - 1, static_cast<int>((y - grid.y_min) / grid.cell));
    return ix * ny + iy;
  }
};

}  // namespace

GroundSegmentation fit_ground_plane(const PointCloud& cloud, const GroundConfig& cfg,
                                    std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (n < 3) throw Error(ErrorCode::kNoGroundPlane, "too few points for a plane fit");

  auto count_inliers = [&](const Vec3& normal, double offset, double band) {
    std::size_t count = 0;
    for (const auto& p : cloud.points) {
      if (std::abs(normal.dot(p.position) + offset) <= band) ++count;
    }
    return count;
  };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t best_count = 0;
  Vec3 best_normal = Vec3::UnitZ();
  double best_offset = 0.0;
  for (int trial = 0; trial < cfg.ransac_iterations; ++trial) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const Vec3& a = cloud.points[i].position;
    const Vec3 normal = (cloud.points[j].position - a).cross(cloud.points[k].position - a);
    const double len = normal.norm();
    if (len < 1e-9) continue;
    const Vec3 unit = normal / len;
    const double offset = -unit.dot(a);
    const std::size_t count = count_inliers(unit, offset, cfg.inlier_band);
    if (count > best_count) {
      best_count = count;
      best_normal = unit;
      best_offset = offset;
    }
  }

  const double ratio = static_cast<double>(best_count) / static_cast<double>(n);
  if (ratio < cfg.min_inlier_ratio) {
    throw Error(ErrorCode::kNoGroundPlane,
                "best plane holds " + std::to_string(best_count) + " of " + std::to_string(n) +
                    " points, below the inlier ratio");
  }

  // Least-squares polish over a shrinking band, so object bases resting on the
  // ground stop pulling the fit. A refit is kept only if it does not lose inliers.
  for (double band = cfg.inlier_band; band >= cfg.inlier_band / 16.0; band *= 0.5) {
    std::vector<std::size_t> inliers;
    inliers.reserve(best_count);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(best_normal.dot(cloud.points[i].position) + best_offset) <= band) {
        inliers.push_back(i);
      }
    }
    if (inliers.size() < 3) break;
    const PcaFit fit =
        pca(inliers.size(), [&](std::size_t i) { return cloud.points[inliers[i]].position; });
    const double offset = -fit.minor.dot(fit.centroid);
    const std::size_t count = count_inliers(fit.minor, offset, cfg.inlier_band);
    if (count < best_count) break;
    best_count = count;
    best_normal = fit.minor;
    best_offset = offset;
  }

  GroundSegmentation seg;
  seg.plane.normal = best_normal;
  seg.plane.offset = best_offset;
  if (seg.plane.normal.z() < 0.0) {
    seg.plane.normal = -seg.plane.normal;
    seg.plane.offset = -seg.plane.offset;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(seg.plane.signed_distance(cloud.points[i].position)) <= cfg.inlier_band) {
      seg.ground_indices.push_back(i);
    } else {
      seg.object_indices.push_back(i);
    }
  }
  return seg;
}

std::vector<LineFit> ransac_line3d(std::span<const Vec3> points, double inlier_tol,
                                   std::uint64_t seed, const LineRansacConfig& cfg) {
  std::vector<LineFit> lines;
  std::vector<std::size_t> remaining(points.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  auto inliers_of = [&](const Line3D& line) {
    std::vector<std::size_t> in;
    for (std::size_t idx : remaining) {
      if (line.distance(points[idx]) <= inlier_tol) in.push_back(idx);
    }
    return in;
  };
  auto refit = [&](const std::vector<std::size_t>& idx) {
    const PcaFit fit = pca(idx.size(), [&](std::size_t i) { return points[idx[i]]; });
    return Line3D::make(fit.centroid, fit.major);
  };

  while (remaining.size() >= std::max<std::size_t>(2, cfg.min_inliers)) {
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    std::size_t best_count = 0;
    std::optional<Line3D> best;
    for (int trial = 0; trial < cfg.iterations; ++trial) {
      const std::size_t a = remaining[pick(rng)];
      const std::size_t b = remaining[pick(rng)];
      const Vec3 dir = points[b] - points[a];
      if (a == b || dir.norm() < 1e-9) continue;
      const Line3D candidate = Line3D::make(points[a], dir);
      std::size_t count = 0;
      for (std::size_t idx : remaining) {
        if (candidate.distance(points[idx]) <= inlier_tol) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best = candidate;
      }
    }
    if (!best || best_count < cfg.min_inliers) break;

    std::vector<std::size_t> inliers = inliers_of(*best);
    Line3D line = refit(inliers);
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<std::size_t> next = inliers_of(line);
      if (next.size() < 2) break;
      inliers = std::move(next);
      line = refit(inliers);
    }
    inliers = inliers_of(line);
    if (inliers.size() < cfg.min_inliers) break;

    std::vector<std::size_t> rest;
    rest.reserve(remaining.size() - inliers.size());
    std::set_difference(remaining.begin(), remaining.end(), inliers.begin(), inliers.end(),
                        std::back_inserter(rest));
    remaining = std::move(rest);
    lines.push_back(LineFit{line, std::move(inliers)});
  }
  return lines;
}

std::vector<std::size_t> extract_lane_points(const GroundSegmentation& seg,
                                             const PointCloud& cloud, const LaneConfig& lane,
                                             const LineRansacConfig& line, std::uint64_t seed) {
  const auto& ground = seg.ground_indices;
  if (ground.empty()) throw Error(ErrorCode::kNoLanePoints, "no ground points");

  double mean = 0.0;
  for (std::size_t i : ground) mean += cloud.points[i].intensity;
  mean /= static_cast<double>(ground.size());
  double var = 0.0;
  for (std::size_t i : ground) {
    const double d = cloud.points[i].intensity - mean;
    var += d * d;
  }
  const double stddev = std::sqrt(var / static_cast<double>(ground.size()));
  const double threshold = mean + lane.intensity_sigma_factor * stddev;

  std::vector<std::size_t> bright;
  std::vector<Vec3> bright_points;
  for (std::size_t i : ground) {
    if (cloud.points[i].intensity > threshold) {
      bright.push_back(i);
      bright_points.push_back(cloud.points[i].position);
    }
  }

  const std::vector<LineFit> lines = ransac_line3d(bright_points, lane.line_tolerance, seed, line);
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < bright.size(); ++k) {
    double d_min = std::numeric_limits<double>::infinity();
    for (const auto& fit : lines) d_min = std::min(d_min, fit.line.distance(bright_points[k]));
    if (d_min < lane.max_line_distance) kept.push_back(bright[k]);
  }
  if (kept.size() < lane.min_points) {
    throw Error(ErrorCode::kNoLanePoints, std::to_string(kept.size()) +
                                              " lane points survive the intensity and line filters");
  }
  return kept;
}

GroundParallelFrame ground_parallel_rotation(const Plane3D& plane, const Line3D& reference_lane) {
  const Vec3 normal = plane.normal.normalized();
  const Vec3 dir = reference_lane.direction.normalized();
  if (std::abs(dir.dot(normal)) >= std::cos(deg2rad(5.0))) {
    throw Error(ErrorCode::kDegenerateFrame, "reference lane is nearly parallel to the ground normal");
  }
  const Vec3 x = (dir - dir.dot(normal) * normal).normalized();
  const Vec3 y = normal.cross(x);
  GroundParallelFrame frame;
  frame.rotation.row(0) = x.transpose();
  frame.rotation.row(1) = y.transpose();
  frame.rotation.row(2) = normal.transpose();
  return frame;
}

std::vector<std::size_t> extract_pole_points(const GroundSegmentation& seg,
                                             const PointCloud& cloud,
                                             const GroundParallelFrame& frame,
                                             const PoleConfig& cfg) {
  const GridIndex grid(cfg.grid);
  std::vector<double> max_height(static_cast<std::size_t>(grid.nx) * grid.ny,
                                 -std::numeric_limits<double>::infinity());
  std::vector<int> cells(seg.object_indices.size());
  std::vector<double> heights(seg.object_indices.size());
  for (std::size_t k = 0; k < seg.object_indices.size(); ++k) {
    const Vec3 g = frame.to_ground(cloud.points[seg.object_indices[k]].position);
    cells[k] = grid.cell_of(g);
    heights[k] = g.z();
    if (cells[k] >= 0) max_height[cells[k]] = std::max(max_height[cells[k]], g.z());
  }
  std::vector<std::size_t> poles;
  for (std::size_t k = 0; k < seg.object_indices.size(); ++k) {
    if (cells[k] < 0 || !(max_height[cells[k]] > cfg.h1)) continue;
    if (heights[k] > cfg.h0) poles.push_back(seg.object_indices[k]);
  }
  if (poles.size() < cfg.min_points) {
    throw Error(ErrorCode::kNoPolePoints,
                std::to_string(poles.size()) + " pole points survive the elevation filters");
  }
  return poles;
}

std::vector<std::vector<std::size_t>> cluster_pole_points(const std::vector<std::size_t>& indices,
                                                          const PointCloud& cloud,
                                                          const GroundParallelFrame& frame,
                                                          const GridConfig& grid_cfg) {
  const GridIndex grid(grid_cfg);
  const std::size_t n_cells = static_cast<std::size_t>(grid.nx) * grid.ny;
  std::vector<std::vector<std::size_t>> members(n_cells);
  for (std::size_t i : indices) {
    const int cell = grid.cell_of(frame.to_ground(cloud.points[i].position));
    if (cell >= 0) members[cell].push_back(i);
  }

  std::vector<int> label(n_cells, -1);
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t start = 0; start < n_cells; ++start) {
    if (members[start].empty() || label[start] >= 0) continue;
    const int id = static_cast<int>(clusters.size());
    clusters.emplace_back();
    std::vector<std::size_t> stack{start};
    label[start] = id;
    while (!stack.empty()) {
      const std::size_t cell = stack.back();
      stack.pop_back();
      auto& out = clusters[id];
      out.insert(out.end(), members[cell].begin(), members[cell].end());
      const int ix = static_cast<int>(cell) / grid.ny, iy = static_cast<int>(cell) % grid.ny;
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          const int nx = ix + dx, ny = iy + dy;
          if (nx < 0 || ny < 0 || nx >= grid.nx || ny >= grid.ny) continue;
          const std::size_t next = static_cast<std::size_t>(nx) * grid.ny + ny;
          if (members[next].empty() || label[next] >= 0) continue;
          label[next] = id;
          stack.push_back(next);
        }
      }
    }
  }
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  return clusters;
}

FeatureSetCloud extract_cloud_features(const PointCloud& cloud, const CloudFeatureConfig& cfg,
                                       std::uint64_t seed) {
  if (cloud.size() < cfg.min_cloud_points) {
    throw Error(ErrorCode::kInvalidArgument, "cloud has " + std::to_string(cloud.size()) +
                                                 " points, at least " +
                                                 std::to_string(cfg.min_cloud_points) + " required");
  }
  FeatureSetCloud out;
  out.ground = fit_ground_plane(cloud, cfg.ground, derive_seed(seed, 1));
  out.lane_indices =
      extract_lane_points(out.ground, cloud, cfg.lane, cfg.line, derive_seed(seed, 2));
  for (std::size_t i : out.lane_indices) out.lane_points.push_back(cloud.points[i].position);

  std::vector<LineFit> lanes =
      ransac_line3d(out.lane_points, cfg.lane.line_tolerance, derive_seed(seed, 3), cfg.line);
  if (lanes.empty()) throw Error(ErrorCode::kInsufficientLines, "no lane line in the cloud");
  std::stable_sort(lanes.begin(), lanes.end(), [](const LineFit& a, const LineFit& b) {
    return a.inliers.size() > b.inliers.size();
  });
  Line3D reference = lanes.front().line;
  if (reference.direction.x() < 0.0) reference.direction = -reference.direction;
  out.frame = ground_parallel_rotation(out.ground.plane, reference);

  for (auto& fit : lanes) {
    const Vec3 g = out.frame.rotation * fit.line.direction;
    if (std::abs(g.z()) >= cfg.lane.max_vertical) continue;
    if (g.x() < 0.0) fit.line.direction = -fit.line.direction;
    out.lane_lines.push_back(std::move(fit));
  }

  try {
    out.pole_indices = extract_pole_points(out.ground, cloud, out.frame, cfg.pole);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoPolePoints) throw;
    throw Error(ErrorCode::kInsufficientLines, std::string("no pole line: ") + e.what());
  }
  std::vector<std::size_t> local(cloud.size(), 0);
  for (std::size_t k = 0; k < out.pole_indices.size(); ++k) {
    local[out.pole_indices[k]] = k;
    out.pole_points.push_back(cloud.points[out.pole_indices[k]].position);
  }

  const auto clusters = cluster_pole_points(out.pole_indices, cloud, out.frame, cfg.pole.grid);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::vector<Vec3> pts;
    for (std::size_t i : clusters[c]) pts.push_back(cloud.points[i].position);
    auto fits = ransac_line3d(pts, cfg.pole.line_tolerance, derive_seed(seed, 100 + c), cfg.line);
    if (fits.empty()) continue;
    LineFit fit = std::move(fits.front());
    Vec3 g = out.frame.rotation * fit.line.direction;
    if (g.z() < 0.0) {
      fit.line.direction = -fit.line.direction;
      g = -g;
    }
    if (g.z() <= cfg.pole.min_vertical) continue;
    for (auto& idx : fit.inliers) idx = local[clusters[c][idx]];
    out.pole_lines.push_back(std::move(fit));
  }
  std::stable_sort(out.pole_lines.begin(), out.pole_lines.end(),
                   [](const LineFit& a, const LineFit& b) {
                     return a.inliers.size() > b.inliers.size();
                   });

  if (out.lane_lines.size() < 2 || out.pole_lines.empty()) {
    throw Error(ErrorCode::kInsufficientLines,
                "found " + std::to_string(out.lane_lines.size()) + " lane and " +
                    std::to_string(out.pole_lines.size()) + " pole lines, need 2 and 1");
  }
  return out;
}

}  // namespace linecalib
