#pragma once

#include <string>

#include "grouping/grouping.hpp"

namespace gwsm {

// On-disk layout:
//   DIR/manifest.tsv      id<TAB>images/<stem>.ppm<TAB>comma-separated class ids (1-based)
//   DIR/images/<stem>.ppm 8-bit RGB
//   DIR/masks/<stem>.pgm  8-bit class-index ground truth (optional)
void save_dataset(const std::string& dir, const Dataset& dataset);

// Throws DataError naming the manifest line on malformed entries.
Dataset load_dataset(const std::string& dir, std::size_t num_classes = 6);

std::string sample_stem(const ImageSample& sample);

// Image-relative stem ("images/00012.ppm" -> "00012").
std::string stem_of(const std::string& filename);

std::vector<std::uint8_t> image_to_rgb8(const Tensor& image);

}  // namespace gwsm
