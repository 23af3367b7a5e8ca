#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace linecalib {

/// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels, row-major.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int w, int h, int c) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0) {}

  std::uint8_t* pixel(int u, int v) { return data.data() + (std::size_t(v) * width + u) * channels; }
  const std::uint8_t* pixel(int u, int v) const {
    return data.data() + (std::size_t(v) * width + u) * channels;
  }
};

/// Reads binary PGM (P5) or PPM (P6) with maxval 255. Errors report the byte offset.
Image8 parse_pnm(std::string_view bytes, std::string_view source = "<memory>");
Image8 read_pnm(const std::filesystem::path& path);
/// Writes P5 for one channel, P6 for three.
void write_pnm(const std::filesystem::path& path, const Image8& image);
std::vector<std::uint8_t> encode_pnm(const Image8& image);

}  // namespace linecalib
