#include "linecalib/config.hpp"

#include <functional>
#include <sstream>
#include <vector>

#include "linecalib/error.hpp"

namespace linecalib {

namespace {

struct Field {
  const char* key;
  std::function<void(PipelineConfig&, const KeyValueText&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename Member>
Field real(const char* key, Member member) {
  return {key,
          [member](PipelineConfig& c, const KeyValueText& kv, const std::string& k) {
            member(c) = kv.number(k);
          },
          [member](const PipelineConfig& c) {
            PipelineConfig copy = c;
            return format_double(member(copy));
          }};
}

template <typename Member>
Field whole(const char* key, Member member) {
  return {key,
          [member](PipelineConfig& c, const KeyValueText& kv, const std::string& k) {
            const long long v = kv.integer(k);
            if (v < 0) throw Error(ErrorCode::kInvalidConfig, "'" + k + "' must be non-negative");
            using T = std::remove_reference_t<decltype(member(c))>;
            member(c) = static_cast<T>(v);
          },
          [member](const PipelineConfig& c) {
            PipelineConfig copy = c;
            return std::to_string(member(copy));
          }};
}

#define LC_FIELD(kind, key, expr) kind(key, [](PipelineConfig& c) -> auto& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      LC_FIELD(whole, "seed", c.seed),
      LC_FIELD(whole, "min_cloud_points", c.cloud.min_cloud_points),
      LC_FIELD(whole, "ground_ransac_iterations", c.cloud.ground.ransac_iterations),
      LC_FIELD(real, "ground_inlier_band", c.cloud.ground.inlier_band),
      LC_FIELD(real, "ground_min_inlier_ratio", c.cloud.ground.min_inlier_ratio),
      LC_FIELD(whole, "line_ransac_iterations", c.cloud.line.iterations),
      LC_FIELD(whole, "line_min_inliers", c.cloud.line.min_inliers),
      LC_FIELD(real, "lane_intensity_sigma_factor", c.cloud.lane.intensity_sigma_factor),
      LC_FIELD(real, "lane_max_line_distance", c.cloud.lane.max_line_distance),
      LC_FIELD(real, "lane_line_tolerance", c.cloud.lane.line_tolerance),
      LC_FIELD(whole, "lane_min_points", c.cloud.lane.min_points),
      LC_FIELD(real, "lane_max_vertical", c.cloud.lane.max_vertical),
      LC_FIELD(real, "pole_h0", c.cloud.pole.h0),
      LC_FIELD(real, "pole_h1", c.cloud.pole.h1),
      LC_FIELD(real, "grid_x_min", c.cloud.pole.grid.x_min),
      LC_FIELD(real, "grid_x_max", c.cloud.pole.grid.x_max),
      LC_FIELD(real, "grid_y_min", c.cloud.pole.grid.y_min),
      LC_FIELD(real, "grid_y_max", c.cloud.pole.grid.y_max),
      LC_FIELD(real, "grid_cell", c.cloud.pole.grid.cell),
      LC_FIELD(real, "pole_line_tolerance", c.cloud.pole.line_tolerance),
      LC_FIELD(whole, "pole_min_points", c.cloud.pole.min_points),
      LC_FIELD(real, "pole_min_vertical", c.cloud.pole.min_vertical),
      LC_FIELD(real, "idt_gamma0", c.image.idt.gamma0),
      LC_FIELD(real, "idt_gamma1", c.image.idt.gamma1),
      LC_FIELD(real, "hough_theta_step_deg", c.image.hough.theta_step_deg),
      LC_FIELD(real, "hough_rho_step", c.image.hough.rho_step),
      LC_FIELD(real, "hough_band", c.image.hough.band),
      LC_FIELD(whole, "hough_min_support", c.image.hough.min_support),
      LC_FIELD(whole, "hough_max_lines", c.image.hough.max_lines),
      LC_FIELD(real, "hough_lane_horizontal_reject_deg", c.image.hough.lane_horizontal_reject_deg),
      LC_FIELD(real, "refine_t_range", c.refine.t_range),
      LC_FIELD(real, "refine_theta_range_deg", c.refine.theta_range_deg),
      LC_FIELD(real, "refine_rot_scale", c.refine.rot_scale),
      LC_FIELD(real, "refine_eta", c.refine.eta),
      LC_FIELD(real, "refine_eta_min", c.refine.eta_min),
      LC_FIELD(real, "refine_decay", c.refine.decay),
      LC_FIELD(whole, "refine_max_samples", c.refine.max_samples),
      LC_FIELD(whole, "refine_patience", c.refine.patience),
  };
  return kFields;
}

#undef LC_FIELD

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidConfig, what);
}

}  // namespace

void RefinementConfig::validate() const {
  require(t_range > 0.0, "refine_t_range must be positive");
  require(theta_range_deg > 0.0, "refine_theta_range_deg must be positive");
  require(rot_scale > 0.0, "refine_rot_scale must be positive");
  require(eta_min > 0.0 && eta_min < eta, "refine step sizes need 0 < eta_min < eta");
  require(decay > 0.0 && decay < 1.0, "refine_decay must lie in (0, 1)");
  require(max_samples > 0, "refine_max_samples must be positive");
  require(patience > 0, "refine_patience must be positive");
}

void PipelineConfig::validate() const {
  const auto& g = cloud.ground;
  require(g.ransac_iterations > 0, "ground_ransac_iterations must be positive");
  require(g.inlier_band > 0.0, "ground_inlier_band must be positive");
  require(g.min_inlier_ratio > 0.0 && g.min_inlier_ratio <= 1.0,
          "ground_min_inlier_ratio must lie in (0, 1]");
  require(cloud.line.iterations > 0, "line_ransac_iterations must be positive");
  require(cloud.line.min_inliers >= 2, "line_min_inliers must be >= 2");
  require(cloud.lane.max_line_distance > 0.0, "lane_max_line_distance must be positive");
  require(cloud.lane.line_tolerance > 0.0, "lane_line_tolerance must be positive");
  const auto& grid = cloud.pole.grid;
  require(grid.cell > 0.0 && grid.x_max > grid.x_min && grid.y_max > grid.y_min,
          "pole grid bounds are empty");
  require(cloud.pole.line_tolerance > 0.0, "pole_line_tolerance must be positive");
  const auto& idt = image.idt;
  require(idt.gamma0 > 0.0 && idt.gamma0 < 1.0, "idt_gamma0 must lie in (0, 1)");
  require(idt.gamma1 > 0.0 && idt.gamma1 < 1.0, "idt_gamma1 must lie in (0, 1)");
  const auto& h = image.hough;
  require(h.theta_step_deg > 0.0 && h.theta_step_deg <= 90.0, "hough_theta_step_deg out of range");
  require(h.rho_step > 0.0, "hough_rho_step must be positive");
  require(h.band >= 0.0, "hough_band must be non-negative");
  require(h.max_lines > 0, "hough_max_lines must be positive");
  refine.validate();
}

PipelineConfig parse_config(const KeyValueText& kv) {
  PipelineConfig cfg;
  for (const auto& [key, entry] : kv.entries) {
    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (key == f.key) field = &f;
    }
    if (field == nullptr) {
      throw Error(ErrorCode::kInvalidConfig,
                  kv.source + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
    try {
      field->set(cfg, kv, key);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidConfig, e.what());
    }
  }
  cfg.refine.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(KeyValueText::load(path));
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << "\n";
  return out.str();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace linecalib
