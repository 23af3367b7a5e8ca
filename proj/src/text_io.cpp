#include "linecalib/text_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "linecalib/error.hpp"

namespace linecalib {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

Error parse_error(const KeyValueText& kv, int line, const std::string& msg) {
  return Error(ErrorCode::kParse, kv.source + ":" + std::to_string(line) + ": " + msg);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

KeyValueText KeyValueText::parse(std::string_view text, std::string source) {
  KeyValueText kv;
  kv.source = std::move(source);
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw parse_error(kv, line_no, "expected `key = value`");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw parse_error(kv, line_no, "empty key");
    if (kv.entries.count(key)) throw parse_error(kv, line_no, "duplicate key '" + key + "'");
    kv.entries.emplace(key, Entry{value, line_no});
  }
  return kv;
}

KeyValueText KeyValueText::load(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

const KeyValueText::Entry& KeyValueText::at(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) throw Error(ErrorCode::kParse, source + ": missing key '" + key + "'");
  return it->second;
}

double KeyValueText::number(const std::string& key) const {
  const Entry& e = at(key);
  double v = 0.0;
  if (!parse_double(e.value, v)) throw parse_error(*this, e.line, "'" + key + "' is not a number");
  return v;
}

long long KeyValueText::integer(const std::string& key) const {
  const Entry& e = at(key);
  long long v = 0;
  const std::string_view s = trim(e.value);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw parse_error(*this, e.line, "'" + key + "' is not an integer");
  }
  return v;
}

Vec3 KeyValueText::vec3(const std::string& key) const {
  const Entry& e = at(key);
  std::istringstream in(e.value);
  std::string tok;
  Vec3 v;
  int n = 0;
  while (in >> tok) {
    double d = 0.0;
    if (n >= 3 || !parse_double(tok, d)) {
      throw parse_error(*this, e.line, "'" + key + "' must hold three numbers");
    }
    v[n++] = d;
  }
  if (n != 3) throw parse_error(*this, e.line, "'" + key + "' must hold three numbers");
  return v;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

Intrinsics parse_intrinsics(const KeyValueText& kv) {
  for (const auto& [key, entry] : kv.entries) {
    if (key == "fx" || key == "fy" || key == "cx" || key == "cy" || key == "width" ||
        key == "height") {
      continue;
    }
    if (key.rfind("k", 0) == 0 || key.rfind("p", 0) == 0 || key.rfind("dist", 0) == 0 ||
        key == "D") {
      throw parse_error(kv, entry.line,
                        "distortion key '" + key + "' not supported; supply rectified intrinsics");
    }
    throw parse_error(kv, entry.line, "unknown key '" + key + "'");
  }
  Intrinsics k;
  k.fx = kv.number("fx");
  k.fy = kv.number("fy");
  k.cx = kv.number("cx");
  k.cy = kv.number("cy");
  k.width = static_cast<int>(kv.integer("width"));
  k.height = static_cast<int>(kv.integer("height"));
  try {
    k.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, kv.source + ": " + e.what());
  }
  return k;
}

Intrinsics read_intrinsics(const std::filesystem::path& path) {
  return parse_intrinsics(KeyValueText::load(path));
}

std::string format_intrinsics(const Intrinsics& k) {
  std::ostringstream out;
  out << "fx = " << format_double(k.fx) << "\n"
      << "fy = " << format_double(k.fy) << "\n"
      << "cx = " << format_double(k.cx) << "\n"
      << "cy = " << format_double(k.cy) << "\n"
      << "width = " << k.width << "\n"
      << "height = " << k.height << "\n";
  return out.str();
}

void write_intrinsics(const std::filesystem::path& path, const Intrinsics& k) {
  write_text_file(path, format_intrinsics(k));
}

Extrinsic parse_extrinsic(const KeyValueText& kv) {
  for (const auto& [key, entry] : kv.entries) {
    if (key != "r" && key != "t") throw parse_error(kv, entry.line, "unknown key '" + key + "'");
  }
  Extrinsic e;
  e.r = canonical_angle_axis(kv.vec3("r"));
  e.t = kv.vec3("t");
  return e;
}

Extrinsic read_extrinsic(const std::filesystem::path& path) {
  return parse_extrinsic(KeyValueText::load(path));
}

std::string format_extrinsic(const Extrinsic& e) {
  std::ostringstream out;
  out << "# LiDAR -> camera extrinsic, p_C = R(r) * p_L + t\n";
  out << "# [R | t] (row-major):\n";
  const auto m = e.matrix();
  char buf[160];
  for (int i = 0; i < 3; ++i) {
    std::snprintf(buf, sizeof(buf), "#   % .9f % .9f % .9f % .9f\n", m(i, 0), m(i, 1), m(i, 2),
                  m(i, 3));
    out << buf;
  }
  out << "r = " << format_double(e.r.x()) << " " << format_double(e.r.y()) << " "
      << format_double(e.r.z()) << "\n";
  out << "t = " << format_double(e.t.x()) << " " << format_double(e.t.y()) << " "
      << format_double(e.t.z()) << "\n";
  return out.str();
}

void write_extrinsic(const std::filesystem::path& path, const Extrinsic& e) {
  write_text_file(path, format_extrinsic(e));
}

}  // namespace linecalib
