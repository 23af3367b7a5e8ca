#include "linecalib/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "linecalib/config.hpp"
#include "linecalib/error.hpp"

namespace linecalib {

namespace {

constexpr double kNearPlane = 0.05;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidSpec, what);
}

std::vector<double> lane_centers(const SceneSpec& s) {
  std::vector<double> ys;
  for (int i = 0; i < s.lane_count; ++i) {
    ys.push_back(s.lane_offset + (i - 0.5 * (s.lane_count - 1)) * s.lane_spacing);
  }
  return ys;
}

// Painted intervals [x0, x1] along a lane.
std::vector<std::pair<double, double>> lane_segments(const SceneSpec& s) {
  if (!s.lane_dashed) return {{s.lane_start, s.lane_end}};
  std::vector<std::pair<double, double>> out;
  for (double x = s.lane_start; x < s.lane_end; x += s.dash_length + s.gap_length) {
    out.emplace_back(x, std::min(x + s.dash_length, s.lane_end));
  }
  return out;
}

bool on_lane(const SceneSpec& s, const std::vector<double>& ys, double x, double y) {
  if (x < s.lane_start || x > s.lane_end) return false;
  if (s.lane_dashed && std::fmod(x - s.lane_start, s.dash_length + s.gap_length) > s.dash_length) {
    return false;
  }
  for (double yc : ys) {
    if (std::abs(y - yc) <= 0.5 * s.lane_width) return true;
  }
  return false;
}

double ray_cylinder(const Vec3& o, const Vec3& d, const PoleSpec& p) {
  const double ox = o.x() - p.x, oy = o.y() - p.y;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a < 1e-12) return kInf;
  const double b = 2.0 * (ox * d.x() + oy * d.y());
  const double c = ox * ox + oy * oy - p.radius * p.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kInf;
  const double sq = std::sqrt(disc);
  for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (s <= 0.0) continue;
    const double z = o.z() + s * d.z();
    if (z >= 0.0 && z <= p.height) return s;
  }
  return kInf;
}

double ray_box(const Vec3& o, const Vec3& d, const BoxSpec& box) {
  const Mat3 to_box = rot_z(-deg2rad(box.yaw_deg));
  const Vec3 lo(-0.5 * box.size.x(), -0.5 * box.size.y(), 0.0);
  const Vec3 hi(0.5 * box.size.x(), 0.5 * box.size.y(), box.size.z());
  const Vec3 ob = to_box * (o - box.center);
  const Vec3 db = to_box * d;
  double near = 0.0, far = kInf;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(db(i)) < 1e-12) {
      if (ob(i) < lo(i) || ob(i) > hi(i)) return kInf;
      continue;
    }
    double s0 = (lo(i) - ob(i)) / db(i), s1 = (hi(i) - ob(i)) / db(i);
    if (s0 > s1) std::swap(s0, s1);
    near = std::max(near, s0);
    far = std::min(far, s1);
    if (near > far) return kInf;
  }
  return near > 0.0 ? near : kInf;
}

// World to camera: p_C = A p_W + b.
struct WorldCamera {
  Mat3 A;
  Vec3 b;
};

WorldCamera world_camera(const SceneSpec& spec) {
  const LidarPose pose = lidar_pose(spec);
  const Mat3 R = spec.extrinsic.rotation();
  WorldCamera cam;
  cam.A = R * pose.rotation.transpose();
  cam.b = spec.extrinsic.t - cam.A * pose.origin;
  return cam;
}

std::vector<Vec3> clip_near(const std::vector<Vec3>& poly) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % poly.size()];
    const bool ina = a.z() >= kNearPlane, inb = b.z() >= kNearPlane;
    if (ina) out.push_back(a);
    if (ina != inb) {
      const double s = (kNearPlane - a.z()) / (b.z() - a.z());
      out.push_back(a + s * (b - a));
    }
  }
  return out;
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + s * ab - p).norm();
}

// Sets every pixel whose center lies inside the projected convex polygon or
// within `tol` pixels of it.
void rasterize(const std::vector<Vec3>& poly_cam, const Intrinsics& k, double tol,
               SemanticMask& mask) {
  const std::vector<Vec3> clipped = clip_near(poly_cam);
  if (clipped.size() < 3) return;
  std::vector<Vec2> px;
  double umin = kInf, umax = -kInf, vmin = kInf, vmax = -kInf;
  for (const Vec3& p : clipped) {
    const Vec2 q(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
    px.push_back(q);
    umin = std::min(umin, q.x());
    umax = std::max(umax, q.x());
    vmin = std::min(vmin, q.y());
    vmax = std::max(vmax, q.y());
  }
  const int u0 = static_cast<int>(std::max(0.0, std::ceil(umin - tol)));
  const int u1 = static_cast<int>(std::min<double>(k.width - 1, std::floor(umax + tol)));
  const int v0 = static_cast<int>(std::max(0.0, std::ceil(vmin - tol)));
  const int v1 = static_cast<int>(std::min<double>(k.height - 1, std::floor(vmax + tol)));
  if (u0 > u1 || v0 > v1) return;

  double area = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    const Vec2& a = px[i];
    const Vec2& b = px[(i + 1) % px.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  const double orient = area >= 0.0 ? 1.0 : -1.0;

  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const Vec2 p(u, v);
      bool inside = true;
      for (std::size_t i = 0; i < px.size() && inside; ++i) {
        const Vec2& a = px[i];
        const Vec2& b = px[(i + 1) % px.size()];
        const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        inside = orient * cross >= 0.0;
      }
      if (!inside) {
        double dmin = kInf;
        for (std::size_t i = 0; i < px.size(); ++i) {
          dmin = std::min(dmin, segment_distance(p, px[i], px[(i + 1) % px.size()]));
        }
        inside = dmin <= tol;
      }
      if (inside) mask.set(u, v);
    }
  }
}

Line2D project_line(const WorldCamera& cam, const Intrinsics& k, const Vec3& p_w, const Vec3& d_w) {
  const Vec3 c0 = cam.A * p_w + cam.b;
  const Vec3 dc = cam.A * d_w;
  // Two points on the line at positive depth.
  double s0 = 0.0, s1 = 10.0;
  if (std::abs(dc.z()) > 1e-3) {
    s0 = (5.0 - c0.z()) / dc.z();
    s1 = (50.0 - c0.z()) / dc.z();
  }
  const auto a = project(k, c0 + s0 * dc);
  const auto b = project(k, c0 + s1 * dc);
  if (!a || !b) throw Error(ErrorCode::kInvalidSpec, "scene line is not in front of the camera");
  return Line2D::through(*a, *b);
}

// ---- spec text ------------------------------------------------------------

std::string join_poles(const std::vector<PoleSpec>& poles) {
  std::string out;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (i) out += "; ";
    const auto& p = poles[i];
    out += format_double(p.x) + " " + format_double(p.y) + " " + format_double(p.height) + " " +
           format_double(p.radius);
  }
  return out;
}

std::string join_boxes(const std::vector<BoxSpec>& boxes) {
  std::string out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += "; ";
    const auto& b = boxes[i];
    for (double v : {b.center.x(), b.center.y(), b.center.z(), b.size.x(), b.size.y(), b.size.z()}) {
      out += format_double(v) + " ";
    }
    out += format_double(b.yaw_deg);
  }
  return out;
}

std::vector<std::vector<double>> split_groups(const std::string& text, std::size_t arity,
                                              const std::string& key) {
  std::vector<std::vector<double>> groups;
  std::stringstream all(text);
  std::string group;
  while (std::getline(all, group, ';')) {
    std::istringstream in(group);
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw Error(ErrorCode::kInvalidSpec, "'" + key + "' has a non-numeric entry");
    if (values.empty()) continue;
    if (values.size() != arity) {
      throw Error(ErrorCode::kInvalidSpec,
                  "'" + key + "' entries need " + std::to_string(arity) + " numbers");
    }
    groups.push_back(values);
  }
  return groups;
}

struct SpecField {
  std::function<void(SceneSpec&, const KeyValueText&, const std::string&)> set;
  std::function<std::string(const SceneSpec&)> get;
};

template <typename T>
SpecField real_field(T SceneSpec::*m) {
  return {[m](SceneSpec& s, const KeyValueText& kv, const std::string& k) { s.*m = kv.number(k); },
          [m](const SceneSpec& s) { return format_double(s.*m); }};
}

template <typename T>
SpecField int_field(T SceneSpec::*m) {
  return {[m](SceneSpec& s, const KeyValueText& kv, const std::string& k) {
            s.*m = static_cast<T>(kv.integer(k));
          },
          [m](const SceneSpec& s) { return std::to_string(s.*m); }};
}

SpecField bool_field(bool SceneSpec::*m) {
  return {[m](SceneSpec& s, const KeyValueText& kv, const std::string& k) {
            const long long v = kv.integer(k);
            require(v == 0 || v == 1, "'" + k + "' must be 0 or 1");
            s.*m = v == 1;
          },
          [m](const SceneSpec& s) { return std::string(s.*m ? "1" : "0"); }};
}

template <typename T>
SpecField camera_field(T Intrinsics::*m) {
  return {[m](SceneSpec& s, const KeyValueText& kv, const std::string& k) {
            if constexpr (std::is_same_v<T, int>) {
              s.intrinsics.*m = static_cast<int>(kv.integer(k));
            } else {
              s.intrinsics.*m = kv.number(k);
            }
          },
          [m](const SceneSpec& s) {
            if constexpr (std::is_same_v<T, int>) {
              return std::to_string(s.intrinsics.*m);
            } else {
              return format_double(s.intrinsics.*m);
            }
          }};
}

std::string vec_text(const Vec3& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

const std::vector<std::pair<std::string, SpecField>>& spec_fields() {
  static const std::vector<std::pair<std::string, SpecField>> kFields = {
      {"seed", int_field(&SceneSpec::seed)},
      {"lane_count", int_field(&SceneSpec::lane_count)},
      {"lane_spacing", real_field(&SceneSpec::lane_spacing)},
      {"lane_offset", real_field(&SceneSpec::lane_offset)},
      {"lane_width", real_field(&SceneSpec::lane_width)},
      {"lane_start", real_field(&SceneSpec::lane_start)},
      {"lane_end", real_field(&SceneSpec::lane_end)},
      {"lane_dashed", bool_field(&SceneSpec::lane_dashed)},
      {"dash_length", real_field(&SceneSpec::dash_length)},
      {"gap_length", real_field(&SceneSpec::gap_length)},
      {"lane_intensity", real_field(&SceneSpec::lane_intensity)},
      {"ground_intensity", real_field(&SceneSpec::ground_intensity)},
      {"ground_intensity_sigma", real_field(&SceneSpec::ground_intensity_sigma)},
      {"poles",
       {[](SceneSpec& s, const KeyValueText& kv, const std::string& k) {
          s.poles.clear();
          for (const auto& g : split_groups(kv.at(k).value, 4, k)) {
            s.poles.push_back({g[0], g[1], g[2], g[3]});
          }
        },
        [](const SceneSpec& s) { return join_poles(s.poles); }}},
      {"pole_intensity", real_field(&SceneSpec::pole_intensity)},
      {"lidar_height", real_field(&SceneSpec::lidar_height)},
      {"ground_roll_deg", real_field(&SceneSpec::ground_roll_deg)},
      {"ground_pitch_deg", real_field(&SceneSpec::ground_pitch_deg)},
      {"road_yaw_deg", real_field(&SceneSpec::road_yaw_deg)},
      {"car", bool_field(&SceneSpec::car)},
      {"clutter_count", int_field(&SceneSpec::clutter_count)},
      {"boxes",
       {[](SceneSpec& s, const KeyValueText& kv, const std::string& k) {
          s.boxes.clear();
          for (const auto& g : split_groups(kv.at(k).value, 7, k)) {
            s.boxes.push_back({Vec3(g[0], g[1], g[2]), Vec3(g[3], g[4], g[5]), g[6]});
          }
        },
        [](const SceneSpec& s) { return join_boxes(s.boxes); }}},
      {"box_intensity", real_field(&SceneSpec::box_intensity)},
      {"rings", int_field(&SceneSpec::rings)},
      {"elevation_min_deg", real_field(&SceneSpec::elevation_min_deg)},
      {"elevation_max_deg", real_field(&SceneSpec::elevation_max_deg)},
      {"azimuth_res_deg", real_field(&SceneSpec::azimuth_res_deg)},
      {"min_range", real_field(&SceneSpec::min_range)},
      {"max_range", real_field(&SceneSpec::max_range)},
      {"noise_sigma", real_field(&SceneSpec::noise_sigma)},
      {"mask_tolerance_px", real_field(&SceneSpec::mask_tolerance_px)},
      {"fx", camera_field(&Intrinsics::fx)},
      {"fy", camera_field(&Intrinsics::fy)},
      {"cx", camera_field(&Intrinsics::cx)},
      {"cy", camera_field(&Intrinsics::cy)},
      {"width", camera_field(&Intrinsics::width)},
      {"height", camera_field(&Intrinsics::height)},
      {"extrinsic_r",
       {[](SceneSpec& s, const KeyValueText& kv, const std::string& k) {
          s.extrinsic.r = canonical_angle_axis(kv.vec3(k));
        },
        [](const SceneSpec& s) { return vec_text(s.extrinsic.r); }}},
      {"extrinsic_t",
       {[](SceneSpec& s, const KeyValueText& kv, const std::string& k) { s.extrinsic.t = kv.vec3(k); },
        [](const SceneSpec& s) { return vec_text(s.extrinsic.t); }}},
  };
  return kFields;
}

}  // namespace

void SceneSpec::validate() const {
  require(lane_count >= 0, "lane_count must be non-negative");
  require(lane_spacing > lane_width, "lane_spacing must exceed lane_width");
  require(lane_width > 0.0, "lane_width must be positive");
  require(lane_end > lane_start, "lane_end must exceed lane_start");
  require(!lane_dashed || (dash_length > 0.0 && gap_length >= 0.0), "dash and gap lengths invalid");
  for (double v : {lane_intensity, ground_intensity, pole_intensity, box_intensity}) {
    require(v >= 0.0 && v <= 1.0, "intensities must lie in [0, 1]");
  }
  require(ground_intensity_sigma >= 0.0, "ground_intensity_sigma must be non-negative");
  for (const auto& p : poles) {
    require(p.height > 0.0 && p.radius > 0.0, "pole height and radius must be positive");
  }
  for (const auto& b : boxes) {
    require(b.size.minCoeff() > 0.0, "box sizes must be positive");
  }
  require(lidar_height > 0.0, "lidar_height must be positive");
  require(std::abs(ground_roll_deg) < 45.0 && std::abs(ground_pitch_deg) < 45.0,
          "ground tilt must stay below 45 degrees");
  require(clutter_count >= 0, "clutter_count must be non-negative");
  require(rings >= 1, "rings must be positive");
  require(elevation_max_deg >= elevation_min_deg && elevation_min_deg > -90.0 &&
              elevation_max_deg < 90.0,
          "elevation range invalid");
  require(azimuth_res_deg > 0.0 && azimuth_res_deg <= 360.0, "azimuth_res_deg out of range");
  require(min_range >= 0.0 && max_range > min_range, "range limits invalid");
  require(noise_sigma >= 0.0, "noise_sigma must be non-negative");
  require(mask_tolerance_px >= 0.0, "mask_tolerance_px must be non-negative");
  require(extrinsic.r.allFinite() && extrinsic.t.allFinite(), "extrinsic must be finite");
  try {
    intrinsics.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidSpec, e.what());
  }
}

Intrinsics kitti_intrinsics() {
  Intrinsics k;
  k.fx = 721.5377;
  k.fy = 721.5377;
  k.cx = 609.5593;
  k.cy = 172.854;
  k.width = 1242;
  k.height = 375;
  return k;
}

Intrinsics wide_intrinsics() {
  Intrinsics k;
  k.fx = 850.0;
  k.fy = 850.0;
  k.cx = 959.5;
  k.cy = 599.5;
  k.width = 1920;
  k.height = 1200;
  return k;
}

Extrinsic nominal_extrinsic() {
  Mat3 R;
  R << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  return Extrinsic::from_rotation(R, Vec3(0.0, -0.08, -0.27));
}

SceneSpec canonical_scene(std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 11));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  SceneSpec s;
  s.seed = seed;
  s.intrinsics = wide_intrinsics();
  s.lidar_height = uniform(1.6, 1.9);
  s.ground_roll_deg = uniform(-1.5, 1.5);
  s.ground_pitch_deg = uniform(-1.5, 1.5);
  s.road_yaw_deg = uniform(-3.0, 3.0);
  s.lane_offset = uniform(-0.5, 0.5);
  s.poles.push_back({uniform(12.0, 15.0), uniform(4.0, 5.0), 6.0, uniform(0.1, 0.15)});
  s.poles.push_back({uniform(16.0, 22.0), uniform(-9.0, -7.0), 6.0, uniform(0.1, 0.15)});

  const Extrinsic nominal = nominal_extrinsic();
  EulerZyx jitter;
  jitter.roll = deg2rad(uniform(-2.0, 2.0));
  jitter.pitch = deg2rad(uniform(-2.0, 2.0));
  jitter.yaw = deg2rad(uniform(-2.0, 2.0));
  const Vec3 dt(uniform(-0.1, 0.1), uniform(-0.05, 0.05), uniform(-0.1, 0.1));
  s.extrinsic = Extrinsic::from_rotation(from_euler_zyx(jitter) * nominal.rotation(), nominal.t + dt);
  return s;
}

SceneSpec parse_scene_spec(const KeyValueText& kv) {
  SceneSpec s;
  s.intrinsics = kitti_intrinsics();
  s.extrinsic = nominal_extrinsic();
  const auto& fields = spec_fields();
  for (const auto& [key, entry] : kv.entries) {
    auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
    if (it == fields.end()) {
      throw Error(ErrorCode::kInvalidSpec,
                  kv.source + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
    try {
      it->second.set(s, kv, key);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidSpec, e.what());
    }
  }
  s.validate();
  return s;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  return parse_scene_spec(KeyValueText::load(path));
}

std::string format_scene_spec(const SceneSpec& spec) {
  std::ostringstream out;
  for (const auto& [key, field] : spec_fields()) out << key << " = " << field.get(spec) << "\n";
  return out.str();
}

LidarPose lidar_pose(const SceneSpec& spec) {
  LidarPose pose;
  pose.rotation = rot_z(deg2rad(spec.road_yaw_deg)) * rot_y(deg2rad(spec.ground_pitch_deg)) *
                  rot_x(deg2rad(spec.ground_roll_deg));
  pose.origin = Vec3(0.0, 0.0, spec.lidar_height);
  return pose;
}

std::vector<BoxSpec> scene_boxes(const SceneSpec& spec) {
  std::vector<BoxSpec> boxes = spec.boxes;
  std::mt19937_64 rng(derive_seed(spec.seed, 12));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto side = [&] { return uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0; };
  if (spec.car) {
    boxes.push_back({Vec3(uniform(24.0, 35.0), side() * uniform(7.0, 8.5), 0.0),
                     Vec3(4.5, 1.8, 1.5), uniform(-5.0, 5.0)});
  }
  for (int i = 0; i < spec.clutter_count; ++i) {
    boxes.push_back({Vec3(uniform(-40.0, 60.0), side() * uniform(10.0, 20.0), 0.0),
                     Vec3(uniform(1.0, 4.0), uniform(1.0, 4.0), uniform(0.5, 2.5)),
                     uniform(0.0, 90.0)});
  }
  return boxes;
}

SyntheticFrame generate(const SceneSpec& spec) {
  spec.validate();
  SyntheticFrame frame;
  frame.truth = spec.extrinsic;
  frame.intrinsics = spec.intrinsics;

  const LidarPose pose = lidar_pose(spec);
  const std::vector<BoxSpec> boxes = scene_boxes(spec);
  const std::vector<double> ys = lane_centers(spec);

  std::mt19937_64 rng(derive_seed(spec.seed, 13));
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int azimuth_steps = std::max(1, static_cast<int>(std::lround(360.0 / spec.azimuth_res_deg)));
  for (int ring = 0; ring < spec.rings; ++ring) {
    const double elevation =
        spec.rings == 1 ? spec.elevation_min_deg
                        : spec.elevation_min_deg + (spec.elevation_max_deg - spec.elevation_min_deg) *
                                                       ring / (spec.rings - 1);
    const double ce = std::cos(deg2rad(elevation)), se = std::sin(deg2rad(elevation));
    for (int step = 0; step < azimuth_steps; ++step) {
      const double az = deg2rad(-180.0 + step * spec.azimuth_res_deg);
      const Vec3 d_l(ce * std::cos(az), ce * std::sin(az), se);
      const Vec3 d_w = pose.rotation * d_l;
      const Vec3& o = pose.origin;

      double best = kInf;
      SurfaceLabel label = SurfaceLabel::kGround;
      if (d_w.z() < -1e-9) best = -o.z() / d_w.z();
      for (const auto& p : spec.poles) {
        const double s = ray_cylinder(o, d_w, p);
        if (s < best) best = s, label = SurfaceLabel::kPole;
      }
      for (const auto& b : boxes) {
        const double s = ray_box(o, d_w, b);
        if (s < best) best = s, label = SurfaceLabel::kBox;
      }
      if (!(best >= spec.min_range && best <= spec.max_range)) continue;

      double intensity = 0.0;
      switch (label) {
        case SurfaceLabel::kGround: {
          const Vec3 hit = o + best * d_w;
          if (on_lane(spec, ys, hit.x(), hit.y())) {
            label = SurfaceLabel::kLane;
            intensity = spec.lane_intensity + 0.03 * gauss(rng);
          } else {
            intensity = spec.ground_intensity + spec.ground_intensity_sigma * gauss(rng);
          }
          break;
        }
        case SurfaceLabel::kPole:
          intensity = spec.pole_intensity + 0.03 * gauss(rng);
          break;
        default:
          intensity = spec.box_intensity + 0.03 * gauss(rng);
          break;
      }
      const double range = best + spec.noise_sigma * std::clamp(gauss(rng), -3.0, 3.0);
      frame.cloud.points.push_back({range * d_l, std::clamp(intensity, 0.0, 1.0)});
      frame.labels.push_back(label);
    }
  }

  const Intrinsics& k = spec.intrinsics;
  const WorldCamera cam = world_camera(spec);
  frame.lane_mask = SemanticMask(k.width, k.height, MaskClass::kLane);
  frame.pole_mask = SemanticMask(k.width, k.height, MaskClass::kPole);
  for (double yc : ys) {
    const double y0 = yc - 0.5 * spec.lane_width, y1 = yc + 0.5 * spec.lane_width;
    for (const auto& [x0, x1] : lane_segments(spec)) {
      std::vector<Vec3> quad;
      for (const Vec3& p : {Vec3(x0, y0, 0), Vec3(x1, y0, 0), Vec3(x1, y1, 0), Vec3(x0, y1, 0)}) {
        quad.push_back(cam.A * p + cam.b);
      }
      rasterize(quad, k, spec.mask_tolerance_px, frame.lane_mask);
    }
  }
  const Vec3 camera_w = -cam.A.transpose() * cam.b;
  for (const auto& p : spec.poles) {
    Vec2 view(camera_w.x() - p.x, camera_w.y() - p.y);
    view = view.norm() > 1e-9 ? view.normalized() : Vec2(1.0, 0.0);
    const Vec3 side(-view.y() * p.radius, view.x() * p.radius, 0.0);
    const Vec3 base(p.x, p.y, 0.0), top(p.x, p.y, p.height);
    std::vector<Vec3> quad;
    for (const Vec3& q : {Vec3(base - side), Vec3(base + side), Vec3(top + side), Vec3(top - side)}) {
      quad.push_back(cam.A * q + cam.b);
    }
    rasterize(quad, k, spec.mask_tolerance_px, frame.pole_mask);
  }
  return frame;
}

TrueLines true_lines(const SceneSpec& spec) {
  spec.validate();
  const LidarPose pose = lidar_pose(spec);
  const Mat3 to_lidar = pose.rotation.transpose();
  const WorldCamera cam = world_camera(spec);
  auto lidar_point = [&](const Vec3& p_w) { return Vec3(to_lidar * (p_w - pose.origin)); };

  TrueLines out;
  for (double yc : lane_centers(spec)) {
    const Vec3 p_w(20.0, yc, 0.0);
    out.lanes.push_back(Line3D::make(lidar_point(p_w), to_lidar * Vec3::UnitX()));
    out.lane_images.push_back(project_line(cam, spec.intrinsics, p_w, Vec3::UnitX()));
  }
  for (const auto& p : spec.poles) {
    const Vec3 p_w(p.x, p.y, 0.0);
    out.poles.push_back(Line3D::make(lidar_point(p_w), to_lidar * Vec3::UnitZ()));
    out.pole_images.push_back(project_line(cam, spec.intrinsics, p_w, Vec3::UnitZ()));
  }
  out.ground.normal = to_lidar * Vec3::UnitZ();
  out.ground.offset = spec.lidar_height;
  if (!out.lanes.empty()) out.frame = ground_parallel_rotation(out.ground, out.lanes.front());
  return out;
}

std::vector<std::filesystem::path> write_bundle(const std::filesystem::path& dir,
                                                const std::string& name,
                                                const SyntheticFrame& frame) {
  std::filesystem::create_directories(dir);
  const std::vector<std::filesystem::path> paths = {
      dir / (name + ".bin"), dir / (name + "_lane.pgm"), dir / (name + "_pole.pgm"),
      dir / "intrinsics.txt", dir / (name + "_truth.txt")};
  write_point_cloud_bin(paths[0], frame.cloud);
  write_mask(paths[1], frame.lane_mask);
  write_mask(paths[2], frame.pole_mask);
  write_intrinsics(paths[3], frame.intrinsics);
  write_extrinsic(paths[4], frame.truth);
  return paths;
}

}  // namespace linecalib
