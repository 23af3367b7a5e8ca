#include <string>

#include "linecalib/error.hpp"
#include "linecalib/image_features.hpp"
#include "linecalib/image_io.hpp"

namespace linecalib {

SemanticMask load_mask(const std::filesystem::path& path, MaskClass cls) {
  const Image8 image = read_pnm(path);
  if (image.channels != 1) {
    throw Error(ErrorCode::kParse, path.string() + ": byte 0: mask must be a P5 (grayscale) image");
  }
  SemanticMask mask(image.width, image.height, cls);
  for (std::size_t i = 0; i < image.data.size(); ++i) mask.bits[i] = image.data[i] > 127 ? 1 : 0;
  return mask;
}

SemanticMask load_mask(const std::filesystem::path& path, MaskClass cls, const Intrinsics& k) {
  SemanticMask mask = load_mask(path, cls);
  if (mask.width != k.width || mask.height != k.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                path.string() + ": mask is " + std::to_string(mask.width) + "x" +
                    std::to_string(mask.height) + ", camera is " + std::to_string(k.width) + "x" +
                    std::to_string(k.height));
  }
  return mask;
}

void write_mask(const std::filesystem::path& path, const SemanticMask& mask) {
  Image8 image(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) image.data[i] = mask.bits[i] ? 255 : 0;
  write_pnm(path, image);
}

}  // namespace linecalib
