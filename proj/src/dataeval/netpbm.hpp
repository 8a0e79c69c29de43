#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gwsm {

// 8-bit binary portable any-map; channels is 1 (P5, graymap) or 3 (P6, pixmap).
struct Image8 {
  std::size_t width = 0, height = 0, channels = 1;
  std::vector<std::uint8_t> pixels;  // interleaved, row-major
};

void write_pgm(const std::string& path, std::size_t width, std::size_t height, const std::vector<std::uint8_t>& gray);
void write_ppm(const std::string& path, std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb);
// Throws DataError on unreadable or malformed files.
Image8 read_netpbm(const std::string& path);

}  // namespace gwsm
