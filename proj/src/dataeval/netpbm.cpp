#include "dataeval/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "numcore/errors.hpp"

namespace gwsm {

namespace {

void write_any(const std::string& path, const char* magic, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels, std::size_t channels) {
  if (pixels.size() != width * height * channels) throw DimensionError("netpbm: pixel count does not match size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << magic << '\n' << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw DataError("write failed for " + path);
}

class HeaderReader {
 public:
  HeaderReader(const std::vector<char>& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::size_t number() {
    skip_space_and_comments();
    std::size_t value = 0;
    bool any = false;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      ++pos_;
      any = true;
    }
    if (!any) throw DataError("malformed netpbm header in " + path_);
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw DataError("malformed netpbm header in " + path_);
    }
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
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

  const std::vector<char>& bytes_;
  const std::string& path_;
};

}  // namespace

void write_pgm(const std::string& path, std::size_t width, std::size_t height, const std::vector<std::uint8_t>& gray) {
  write_any(path, "P5", width, height, gray, 1);
}

void write_ppm(const std::string& path, std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb) {
  write_any(path, "P6", width, height, rgb, 3);
}

Image8 read_netpbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw DataError("not a binary PGM/PPM file: " + path);
  }
  Image8 img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader header(bytes, path);
  img.width = header.number();
  img.height = header.number();
  const std::size_t maxval = header.number();
  if (maxval != 255) throw DataError("only 8-bit netpbm files are supported: " + path);
  if (img.width == 0 || img.height == 0) throw DataError("empty image in " + path);
  const std::size_t offset = header.raster_offset();
  const std::size_t expected = img.width * img.height * img.channels;
  if (bytes.size() < offset + expected) throw DataError("truncated raster in " + path);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(offset + expected));
  return img;
}

}  // namespace gwsm
