#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "training/model.hpp"

namespace gwsm {

inline constexpr std::uint8_t kIgnoreLabel = 255;

enum class CamSource { intermediate, graph, ensemble };

std::string to_string(CamSource source);
CamSource parse_cam_source(const std::string& text);

struct CamStack {
  std::int64_t sample_id = 0;
  Tensor cams_m;    // [L×H×W] from the intermediate head
  Tensor cams_g;    // [L×H×W] from the graph head
  Tensor cams_ens;  // mean of the two
  Label present_classes;

  const Tensor& get(CamSource source) const;
};

struct PseudoLabel {
  std::vector<std::uint8_t> mask;  // class ids 1..L, 0 background, kIgnoreLabel
  std::size_t height = 0, width = 0;
  CamSource provenance = CamSource::ensemble;
};

// Present classes: clamp at zero and divide by the spatial max (when positive).
// Absent classes are zeroed.
Tensor extract_cam(const Tensor& class_map, const Label& label);

Tensor ensemble(const Tensor& cams_m, const Tensor& cams_g);

// Per pixel, M = max over present classes and c its argmax (ties to the
// smallest class). M >= θ_fg -> class c, M < θ_bg -> background, otherwise
// ignore. The CAM grid is upsampled to out_height×out_width by nearest
// neighbour.
PseudoLabel make_pseudo_label(const Tensor& cams, const Label& label, double theta_fg, double theta_bg,
                              std::size_t out_height, std::size_t out_width, CamSource provenance = CamSource::ensemble);

// CAM stacks for every sample, grouped greedily (last group may be smaller)
// and run with dropout in deterministic eval mode.
std::vector<CamStack> compute_cams(const Model& model, const Dataset& dataset, std::uint64_t seed);

}  // namespace gwsm
