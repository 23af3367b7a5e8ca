#include "linecalib/image_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "linecalib/error.hpp"

namespace linecalib {

namespace {

bool ranked_before(const HoughLine& a, const HoughLine& b) {
  if (a.support != b.support) return a.support > b.support;
  return a.line.rho() < b.line.rho();
}

}  // namespace

std::size_t SemanticMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<int> l1_distance_field(const SemanticMask& mask, bool from_set, OutsideFrame outside) {
  const int w = mask.width, h = mask.height;
  constexpr int kFar = std::numeric_limits<int>::max() / 2;
  const std::uint8_t target = from_set ? 1 : 0;
  std::vector<int> d(std::size_t(w) * h);
  bool any = false;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t i = std::size_t(v) * w + u;
      if (mask.bits[i] == target) {
        d[i] = 0;
        any = true;
      } else if (outside == OutsideFrame::kTarget) {
        d[i] = std::min({u + 1, v + 1, w - u, h - v});
      } else {
        d[i] = kFar;
      }
    }
  }
  if (!any && outside == OutsideFrame::kIgnored) {
    throw Error(ErrorCode::kEmptyTarget,
                from_set ? "mask has no set pixel" : "mask has no unset pixel");
  }
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      int& x = d[std::size_t(v) * w + u];
      if (u > 0) x = std::min(x, d[std::size_t(v) * w + u - 1] + 1);
      if (v > 0) x = std::min(x, d[std::size_t(v - 1) * w + u] + 1);
    }
  }
  for (int v = h - 1; v >= 0; --v) {
    for (int u = w - 1; u >= 0; --u) {
      int& x = d[std::size_t(v) * w + u];
      if (u + 1 < w) x = std::min(x, d[std::size_t(v) * w + u + 1] + 1);
      if (v + 1 < h) x = std::min(x, d[std::size_t(v + 1) * w + u] + 1);
    }
  }
  return d;
}

HeightMap idt_height_map(const SemanticMask& mask, const IdtConfig& cfg) {
  const std::vector<int> to_mask = l1_distance_field(mask, true);
  const std::vector<int> to_complement = l1_distance_field(mask, false, OutsideFrame::kTarget);
  HeightMap map{mask.width, mask.height, std::vector<double>(mask.bits.size())};
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    map.values[i] = mask.bits[i] ? std::pow(cfg.gamma0, static_cast<double>(to_complement[i]))
                                 : std::pow(cfg.gamma1, static_cast<double>(to_mask[i]));
  }
  return map;
}

namespace {

constexpr double kStrokeStep = 0.5;
constexpr double kMaxStrokeHalfWidth = 100.0;
constexpr double kMidpointTrim = 2.0;

}  // namespace

std::vector<HoughLine> hough_lines(const SemanticMask& mask, const HoughConfig& cfg) {
  struct Pixel {
    double u, v;
    bool alive;
  };
  // Work relative to the bounding-box corner of the set pixels, so a translated
  // mask votes into exactly the same bins.
  int u0 = mask.width, v0 = mask.height;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (mask.at(u, v)) u0 = std::min(u0, u), v0 = std::min(v0, v);
    }
  }
  std::vector<Pixel> pixels;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (mask.at(u, v)) pixels.push_back({double(u - u0), double(v - v0), true});
    }
  }

  const int n_theta = std::max(1, static_cast<int>(std::lround(180.0 / cfg.theta_step_deg)));
  std::vector<double> cos_t(n_theta), sin_t(n_theta);
  for (int k = 0; k < n_theta; ++k) {
    const double theta = deg2rad(k * cfg.theta_step_deg);
    cos_t[k] = std::cos(theta);
    sin_t[k] = std::sin(theta);
  }
  const double diag = std::hypot(double(mask.width), double(mask.height));
  const int rho_offset = static_cast<int>(std::ceil(diag / cfg.rho_step)) + 1;
  const int n_rho = 2 * rho_offset + 1;
  std::vector<int> acc(std::size_t(n_theta) * n_rho, 0);

  auto vote = [&](const Pixel& p, int delta) {
    for (int k = 0; k < n_theta; ++k) {
      const double rho = p.u * cos_t[k] + p.v * sin_t[k];
      const int r = static_cast<int>(std::lround(rho / cfg.rho_step)) + rho_offset;
      acc[std::size_t(k) * n_rho + r] += delta;
    }
  };
  for (const auto& p : pixels) vote(p, +1);

  auto band_of = [&](const Line2D& line) {
    std::vector<std::size_t> band;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      if (pixels[i].alive && std::abs(line.signed_distance({pixels[i].u, pixels[i].v})) <= cfg.band) {
        band.push_back(i);
      }
    }
    return band;
  };

  std::vector<int> index(std::size_t(mask.width) * mask.height, -1);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    index[std::size_t(pixels[i].v + v0) * mask.width + std::size_t(pixels[i].u + u0)] =
        static_cast<int>(i);
  }
  auto alive_at = [&](const Vec2& q) -> int {
    const double u = std::floor(q.x() + 0.5) + u0, v = std::floor(q.y() + 0.5) + v0;
    if (u < 0 || v < 0 || u >= mask.width || v >= mask.height) return -1;
    const int i = index[std::size_t(v) * mask.width + std::size_t(u)];
    return i >= 0 && pixels[i].alive ? i : -1;
  };
  struct Stroke {
    std::vector<Vec2> midpoints;
    std::vector<std::size_t> pixels;
  };
  auto trace_stroke = [&](const Line2D& line, const std::vector<std::size_t>& band) {
    const Vec2 n(line.a, line.b);
    const Vec2 d(-line.b, line.a);
    const Vec2 origin = -line.c * n;
    std::vector<long> stations;
    for (std::size_t i : band) stations.push_back(std::lround(d.dot(Vec2(pixels[i].u, pixels[i].v))));
    std::sort(stations.begin(), stations.end());
    stations.erase(std::unique(stations.begin(), stations.end()), stations.end());
    Stroke stroke;
    for (long s : stations) {
      const Vec2 foot = origin + double(s) * d;
      if (alive_at(foot) < 0) continue;
      double lo = 0.0, hi = 0.0;
      for (double o = kStrokeStep; o <= kMaxStrokeHalfWidth; o += kStrokeStep) {
        const int i = alive_at(foot + o * n);
        if (i < 0) break;
        stroke.pixels.push_back(std::size_t(i));
        hi = o;
      }
      for (double o = kStrokeStep; o <= kMaxStrokeHalfWidth; o += kStrokeStep) {
        const int i = alive_at(foot - o * n);
        if (i < 0) break;
        stroke.pixels.push_back(std::size_t(i));
        lo = o;
      }
      stroke.pixels.push_back(std::size_t(alive_at(foot)));
      stroke.midpoints.push_back(foot + 0.5 * (hi - lo) * n);
    }
    return stroke;
  };

  const double horizontal_tol = deg2rad(cfg.lane_horizontal_reject_deg);
  std::vector<HoughLine> lines;
  while (static_cast<int>(lines.size()) < cfg.max_lines) {
    const auto peak = std::max_element(acc.begin(), acc.end());
    if (*peak <= 0) break;
    const std::size_t cell = static_cast<std::size_t>(peak - acc.begin());
    const int k = static_cast<int>(cell / n_rho);
    const int r = static_cast<int>(cell % n_rho);
    Line2D line =
        Line2D::from_theta_rho(deg2rad(k * cfg.theta_step_deg), (r - rho_offset) * cfg.rho_step);
    std::vector<std::size_t> band = band_of(line);

    // Sub-bin polish: total least squares over the band, kept if it loses no support.
    if (band.size() >= 2) {
      std::vector<Vec2> pts;
      pts.reserve(band.size());
      for (std::size_t i : band) pts.emplace_back(pixels[i].u, pixels[i].v);
      try {
        const Line2D polished = fit_line2d(pts);
        std::vector<std::size_t> polished_band = band_of(polished);
        if (polished_band.size() >= band.size()) {
          line = polished;
          band = std::move(polished_band);
        }
      } catch (const Error&) {
        // coincident pixels: keep the accumulator line
      }
    }

    // Walk across the stroke at every station along the line. A wide stroke
    // (a near lane) is then removed as a whole and the line follows its middle.
    const Stroke stroke = trace_stroke(line, band);
    if (stroke.midpoints.size() >= 2) {
      try {
        Line2D centered = fit_line2d(stroke.midpoints);
        std::vector<Vec2> kept;
        for (const Vec2& m : stroke.midpoints) {
          if (std::abs(centered.signed_distance(m)) <= kMidpointTrim) kept.push_back(m);
        }
        if (kept.size() >= 2) centered = fit_line2d(kept);
        line = centered;
        band = band_of(line);
      } catch (const Error&) {
        // degenerate midpoints: keep the band line
      }
    }
    if (band.size() < cfg.min_support) break;

    for (std::size_t i : band) {
      if (!pixels[i].alive) continue;
      pixels[i].alive = false;
      vote(pixels[i], -1);
    }
    for (std::size_t i : stroke.pixels) {
      if (!pixels[i].alive) continue;
      pixels[i].alive = false;
      vote(pixels[i], -1);
    }
    if (mask.cls == MaskClass::kLane && std::abs(line.theta() - kPi / 2) < horizontal_tol) {
      continue;
    }
    lines.push_back({Line2D::from_coefficients(line.a, line.b, line.c - line.a * u0 - line.b * v0),
                     band.size()});
  }

  if (lines.empty()) throw Error(ErrorCode::kNoLines, "no Hough line reaches the support threshold");
  std::stable_sort(lines.begin(), lines.end(), ranked_before);
  return lines;
}

FeatureSetImage extract_image_features(SemanticMask lane_mask, SemanticMask pole_mask,
                                       const ImageFeatureConfig& cfg) {
  FeatureSetImage f;
  f.lane_height = idt_height_map(lane_mask, cfg.idt);
  f.pole_height = idt_height_map(pole_mask, cfg.idt);
  try {
    f.lane_lines = hough_lines(lane_mask, cfg.hough);
    f.pole_lines = hough_lines(pole_mask, cfg.hough);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoLines) throw;
    throw Error(ErrorCode::kInsufficientLines, std::string("image lines: ") + e.what());
  }
  if (f.lane_lines.size() < 2) {
    throw Error(ErrorCode::kInsufficientLines,
                "only " + std::to_string(f.lane_lines.size()) + " lane line in the image");
  }
  f.lane_mask = std::move(lane_mask);
  f.pole_mask = std::move(pole_mask);
  return f;
}

PrincipalLines select_principal_lines(const FeatureSetImage& features) {
  if (features.lane_lines.size() < 2 || features.pole_lines.empty()) {
    throw Error(ErrorCode::kInsufficientLines, "need at least 2 lane lines and 1 pole line");
  }
  std::vector<HoughLine> lanes = features.lane_lines;
  std::vector<HoughLine> poles = features.pole_lines;
  std::stable_sort(lanes.begin(), lanes.end(), ranked_before);
  std::stable_sort(poles.begin(), poles.end(), ranked_before);
  return {lanes[0].line, lanes[1].line, poles[0].line};
}

}  // namespace linecalib
