#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "linecalib/config.hpp"
#include "linecalib/geometry.hpp"

namespace linecalib {

enum class MaskClass { kLane, kPole };

struct SemanticMask {
  int width = 0;
  int height = 0;
  MaskClass cls = MaskClass::kLane;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  SemanticMask() = default;
  SemanticMask(int w, int h, MaskClass c) : width(w), height(h), cls(c), bits(std::size_t(w) * h, 0) {}

  bool at(int u, int v) const { return bits[std::size_t(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) { bits[std::size_t(v) * width + u] = on ? 1 : 0; }
  std::size_t count() const;
};

/// Binary PGM (P5, maxval 255); pixels above 127 are set.
SemanticMask load_mask(const std::filesystem::path& path, MaskClass cls);
/// As above, plus Error(kDimensionMismatch) when the size differs from the camera.
SemanticMask load_mask(const std::filesystem::path& path, MaskClass cls, const Intrinsics& k);
void write_mask(const std::filesystem::path& path, const SemanticMask& mask);

/// How pixels outside the image take part in a distance query.
enum class OutsideFrame { kIgnored, kTarget };

/// Exact L1 (city-block) distance of every pixel to the nearest target pixel,
/// where targets are the set pixels (from_set) or the unset pixels (!from_set).
/// Two-pass chamfer sweep with unit costs. Throws Error(kEmptyTarget) when no
/// target exists.
std::vector<int> l1_distance_field(const SemanticMask& mask, bool from_set,
                                   OutsideFrame outside = OutsideFrame::kIgnored);

struct HeightMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int u, int v) const { return values[std::size_t(v) * width + u]; }
};

/// Inverse distance transform: gamma0^d inside the mask (d = L1 distance to
/// the complement, pixels beyond the border count as complement) and
/// gamma1^d outside (d = L1 distance to the mask).
/// Throws Error(kEmptyTarget) on an empty mask.
HeightMap idt_height_map(const SemanticMask& mask, const IdtConfig& cfg);

struct HoughLine {
  Line2D line;
  std::size_t support = 0;  // set pixels within the band around the line
};

/// Iterative Hough transform with pixel erasure. Lines are returned by
/// decreasing support (ties: smaller rho). Lane masks drop near-horizontal lines.
/// Throws Error(kNoLines) when nothing reaches cfg.min_support.
std::vector<HoughLine> hough_lines(const SemanticMask& mask, const HoughConfig& cfg);

struct FeatureSetImage {
  SemanticMask lane_mask;
  SemanticMask pole_mask;
  HeightMap lane_height;
  HeightMap pole_height;
  std::vector<HoughLine> lane_lines;
  std::vector<HoughLine> pole_lines;
};

/// Height maps and Hough lines for both masks. Throws Error(kEmptyTarget) on an
/// empty mask and Error(kInsufficientLines) with < 2 lane or < 1 pole line.
FeatureSetImage extract_image_features(SemanticMask lane_mask, SemanticMask pole_mask,
                                       const ImageFeatureConfig& cfg);

struct PrincipalLines {
  Line2D lane1;
  Line2D lane2;
  Line2D pole;
};

/// The two best-supported lane lines and the best pole line.
PrincipalLines select_principal_lines(const FeatureSetImage& features);

}  // namespace linecalib
