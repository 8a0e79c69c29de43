#pragma once

#include <string>
#include <vector>

#include "camgen/camgen.hpp"
#include "dataeval/miou.hpp"

namespace gwsm {

// Nearest-neighbour upsampling of one CAM channel to out_h×out_w, scaled to 0..255.
std::vector<std::uint8_t> heatmap_pixels(const Tensor& cams, std::size_t channel, std::size_t out_h, std::size_t out_w);

// DIR/<stem>_c<k>.pgm for every class k (1-based; all-zero when absent) and
// DIR/<stem>_overlay.ppm. Returns the number of files written.
std::size_t export_cams(const std::vector<CamStack>& cams, const Dataset& dataset, CamSource source,
                        const std::string& dir);

// DIR/<stem>.pgm with class ids, 0 background, 255 ignore.
void export_pseudo_labels(const std::vector<PseudoLabel>& labels, const Dataset& dataset, const std::string& dir);

// Reads DIR/<stem>.pgm for every sample and scores it against the ground truth.
EvalReport evaluate_prediction_dir(const Dataset& dataset, const std::string& dir, std::size_t num_classes);

}  // namespace gwsm
