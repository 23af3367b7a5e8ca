#include "support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace linecalib::test {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

Mat3 random_rotation(Rng& rng) {
  return angle_axis_to_matrix(random_unit(rng) * uniform(rng, 0.0, kPi));
}

Mat3 random_small_rotation(Rng& rng, double max_angle) {
  return angle_axis_to_matrix(random_unit(rng) * uniform(rng, -max_angle, max_angle));
}

Extrinsic random_extrinsic(Rng& rng, double max_t) {
  const Vec3 t(uniform(rng, -max_t, max_t), uniform(rng, -max_t, max_t), uniform(rng, -max_t, max_t));
  return Extrinsic::from_rotation(random_rotation(rng), t);
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("linecalib_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

RoadCloud make_road_cloud(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  RoadCloud rc;
  rc.world_from_lidar = rot_z(deg2rad(uniform(rng, -3, 3))) * rot_y(deg2rad(uniform(rng, -1.5, 1.5))) *
                        rot_x(deg2rad(uniform(rng, -1.5, 1.5)));
  rc.origin = Vec3(0.0, 0.0, uniform(rng, 1.6, 1.9));
  const double offset = uniform(rng, -0.5, 0.5);
  rc.lane_y = {offset - 1.8, offset + 1.8};

  auto add = [&](const Vec3& p_w, double intensity, SurfaceLabel label) {
    const Vec3 p_l = rc.world_from_lidar.transpose() * (p_w - rc.origin);
    rc.cloud.points.push_back({p_l, std::max(0.0, intensity)});
    rc.labels.push_back(label);
  };
  auto ground_z = [&] { return 0.01 * std::clamp(g(rng), -3.0, 3.0); };

  for (int i = 0; i < 2500; ++i) {
    const double x = uniform(rng, 3, 45), y = uniform(rng, -12, 12);
    bool lane = false;
    for (double yc : rc.lane_y) lane = lane || std::abs(y - yc) <= 0.075;
    add({x, y, ground_z()}, lane ? 0.9 + 0.03 * g(rng) : 0.1 + 0.02 * g(rng),
        lane ? SurfaceLabel::kLane : SurfaceLabel::kGround);
  }
  for (double yc : rc.lane_y) {
    for (int i = 0; i < 200; ++i) {
      add({uniform(rng, 3, 45), yc + uniform(rng, -0.075, 0.075), ground_z()}, 0.9 + 0.03 * g(rng),
          SurfaceLabel::kLane);
    }
  }
  const std::array<Vec2, 2> poles = {Vec2(uniform(rng, 12, 25), uniform(rng, 4, 8)),
                                     Vec2(uniform(rng, 12, 25), uniform(rng, -9, -5))};
  for (const Vec2& c : poles) {
    for (int i = 0; i < 120; ++i) {
      const double a = uniform(rng, 0, 2 * kPi);
      add({c.x() + 0.12 * std::cos(a), c.y() + 0.12 * std::sin(a), uniform(rng, 0.15, 6.0)},
          0.3 + 0.03 * g(rng), SurfaceLabel::kPole);
    }
  }
  const Vec2 car(uniform(rng, 20, 30), (uniform(rng, 0, 1) < 0.5 ? -1 : 1) * uniform(rng, 6, 8));
  for (int i = 0; i < 200; ++i) {
    add({car.x() + uniform(rng, -2.25, 2.25), car.y() + uniform(rng, -0.9, 0.9), uniform(rng, 0.15, 1.5)},
        0.15, SurfaceLabel::kBox);
  }
  for (int i = 0; i < 50; ++i) {
    add({uniform(rng, 3, 45), uniform(rng, -12, 12), uniform(rng, 0.3, 2.0)}, 0.15, SurfaceLabel::kBox);
  }
  return rc;
}

Intrinsics small_intrinsics() {
  Intrinsics k;
  k.fx = k.fy = 850.0 / 8.0;
  k.cx = 119.5;
  k.cy = 74.5;
  k.width = 240;
  k.height = 150;
  return k;
}

SceneSpec small_scene(std::uint64_t seed) {
  SceneSpec s = canonical_scene(seed);
  s.rings = 32;
  s.azimuth_res_deg = 0.5;
  s.intrinsics = small_intrinsics();
  return s;
}

SceneSpec random_line_scene(Rng& rng) {
  SceneSpec s = canonical_scene(rng());
  s.lane_spacing = uniform(rng, 2.5, 4.5);
  s.lane_offset = uniform(rng, -1.0, 1.0);
  s.ground_roll_deg = uniform(rng, -3, 3);
  s.ground_pitch_deg = uniform(rng, -3, 3);
  s.road_yaw_deg = uniform(rng, -5, 5);
  s.poles.clear();
  s.poles.push_back({uniform(rng, 8, 40), uniform(rng, 3, 12), 6.0, 0.12});
  s.poles.push_back({uniform(rng, 8, 40), -uniform(rng, 3, 12), 6.0, 0.12});
  const Extrinsic nominal = nominal_extrinsic();
  const Vec3 dt(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
  s.extrinsic = Extrinsic::from_rotation(random_small_rotation(rng, deg2rad(10.0)) * nominal.rotation(),
                                         nominal.t + dt);
  return s;
}

CostEvaluator labelled_evaluator(const SyntheticFrame& frame, const IdtConfig& idt) {
  std::vector<Vec3> lane, pole;
  for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
    if (frame.labels[i] == SurfaceLabel::kLane) lane.push_back(frame.cloud.points[i].position);
    if (frame.labels[i] == SurfaceLabel::kPole) pole.push_back(frame.cloud.points[i].position);
  }
  return CostEvaluator(frame.intrinsics, idt_height_map(frame.lane_mask, idt),
                       idt_height_map(frame.pole_mask, idt), lane, pole);
}

void draw_segment(SemanticMask& mask, const Vec2& a, const Vec2& b, double radius) {
  const Vec2 d = b - a;
  const double len2 = std::max(d.squaredNorm(), 1e-12);
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      const Vec2 q(u, v);
      const double s = std::clamp((q - a).dot(d) / len2, 0.0, 1.0);
      if ((a + s * d - q).norm() <= radius) mask.set(u, v);
    }
  }
}

CommandResult run_command(const std::string& command, const std::string& stderr_path) {
  const std::string full = command + (stderr_path.empty() ? "" : " 2>" + stderr_path);
  CommandResult result;
  FILE* pipe = ::popen(full.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace linecalib::test
