#include "linecalib/pointcloud.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "linecalib/error.hpp"
#include "linecalib/text_io.hpp"

namespace linecalib {

namespace {

static_assert(sizeof(float) == 4);
static_assert(std::endian::native == std::endian::little,
              "binary cloud I/O assumes a little-endian host");

bool is_ascii_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".txt" || ext == ".xyz" || ext == ".asc";
}

PointCloud parse_ascii(const std::string& text, const std::string& source) {
  PointCloud cloud;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream fields(line);
    LidarPoint p;
    if (!(fields >> p.position.x() >> p.position.y() >> p.position.z() >> p.intensity)) {
      throw Error(ErrorCode::kParse, source + ":" + std::to_string(line_no) +
                                         ": expected `x y z intensity`");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!p.position.allFinite() || !std::isfinite(p.intensity) || p.intensity < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "invalid point at index " + std::to_string(i));
    }
  }
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  PointCloud cloud;
  if (is_ascii_path(path)) {
    cloud = parse_ascii(bytes, path.string());
  } else {
    if (bytes.size() % 16 != 0) {
      throw Error(ErrorCode::kParse, path.string() + ": size " + std::to_string(bytes.size()) +
                                         " is not a multiple of 16 bytes");
    }
    const std::size_t n = bytes.size() / 16;
    cloud.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float rec[4];
      std::memcpy(rec, bytes.data() + 16 * i, sizeof(rec));
      cloud.points[i].position = Vec3(rec[0], rec[1], rec[2]);
      cloud.points[i].intensity = rec[3];
    }
  }
  try {
    cloud.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return cloud;
}

void write_point_cloud_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  std::string bytes(cloud.size() * 16, '\0');
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const float rec[4] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                          static_cast<float>(p.position.z()), static_cast<float>(p.intensity)};
    std::memcpy(bytes.data() + 16 * i, rec, sizeof(rec));
  }
  write_text_file(path, bytes);
}

}  // namespace linecalib
