#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "linecalib/geometry.hpp"

namespace linecalib {

// Parsed `key = value` text. Blank lines and lines starting with '#' are skipped.
struct KeyValueText {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;
  std::string source;  // file name, for diagnostics

  /// Throws Error(kParse) on malformed lines or duplicate keys.
  static KeyValueText parse(std::string_view text, std::string source = "<text>");
  static KeyValueText load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  const Entry& at(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  Vec3 vec3(const std::string& key) const;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Shortest-round-trip formatting of a double.
std::string format_double(double v);

Intrinsics parse_intrinsics(const KeyValueText& kv);
Intrinsics read_intrinsics(const std::filesystem::path& path);
std::string format_intrinsics(const Intrinsics& k);
void write_intrinsics(const std::filesystem::path& path, const Intrinsics& k);

Extrinsic parse_extrinsic(const KeyValueText& kv);
Extrinsic read_extrinsic(const std::filesystem::path& path);
/// r/t lines plus a commented 3x4 [R | t] block for human inspection.
std::string format_extrinsic(const Extrinsic& e);
void write_extrinsic(const std::filesystem::path& path, const Extrinsic& e);

}  // namespace linecalib
