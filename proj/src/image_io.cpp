#include "linecalib/image_io.hpp"

#include <cctype>
#include <string>

#include "linecalib/error.hpp"
#include "linecalib/text_io.hpp"

namespace linecalib {

namespace {

class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, std::string_view source) : bytes_(bytes), source_(source) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kParse,
                std::string(source_) + ": byte " + std::to_string(pos_) + ": " + msg);
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1 << 20) fail(std::string(what) + " too large");
      ++pos_;
    }
    if (pos_ == start) fail(std::string("expected ") + what);
    return static_cast<int>(value);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace

Image8 parse_pnm(std::string_view bytes, std::string_view source) {
  HeaderReader in(bytes, source);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    in.fail("expected binary PGM (P5) or PPM (P6) magic");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  in.advance(2);
  const int width = in.read_int("width");
  const int height = in.read_int("height");
  const int maxval = in.read_int("maxval");
  if (width <= 0 || height <= 0) in.fail("image dimensions must be positive");
  if (maxval != 255) in.fail("only 8-bit images (maxval 255) are supported");
  if (in.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[in.pos()]))) {
    in.fail("expected whitespace before pixel data");
  }
  in.advance(1);
  Image8 image(width, height, channels);
  const std::size_t need = image.data.size();
  if (bytes.size() - in.pos() < need) {
    in.fail("truncated pixel data: need " + std::to_string(need) + " bytes, have " +
            std::to_string(bytes.size() - in.pos()));
  }
  std::copy_n(bytes.data() + in.pos(), need, image.data.begin());
  return image;
}

Image8 read_pnm(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  return parse_pnm(bytes, path.string());
}

std::vector<std::uint8_t> encode_pnm(const Image8& image) {
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.data.begin(), image.data.end());
  return out;
}

void write_pnm(const std::filesystem::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "PNM output needs 1 or 3 channels");
  }
  const auto bytes = encode_pnm(image);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace linecalib
