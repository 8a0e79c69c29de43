#pragma once

#include "model/params.hpp"
#include "numcore/ops.hpp"

namespace gwsm {

struct BackboneConfig {
  std::size_t embed_channels = 64;  // C
  std::size_t num_classes = 6;      // L
  std::size_t width1 = 16;
  std::size_t width2 = 32;
  std::size_t width3 = 64;
};

// 1×1 class-aware convolution followed by global average pooling.
struct ClassHead {
  Tensor weight;  // [L×C×1×1]
  Tensor bias;    // [L]

  static ClassHead init(std::size_t num_classes, std::size_t channels, Rng& rng);
};

struct HeadOutput {
  Tensor class_map;  // [L×H×W], pre-GAP, used for CAMs
  Tensor logits;     // [L]
};

HeadOutput apply_head(const Tensor& features, const ClassHead& head);

struct BackboneParams {
  BackboneConfig config;
  Tensor conv1_w, conv1_b;
  Tensor conv2_w, conv2_b;
  Tensor conv3_w, conv3_b;
  Tensor conv4_w, conv4_b;  // dilation 2
  ClassHead intermediate;   // produces l^m

  static BackboneParams init(const BackboneConfig& config, Rng& rng);
  NamedTensors named_parameters() const;
};

// [3×H₀×W₀] image -> [C×H₀/4×W₀/4] node embedding h⁰.
Tensor extract_features(const Tensor& image, const BackboneParams& params);

// l^m = GAP(class conv(h⁰)), also returning the class map.
HeadOutput intermediate_readout(const Tensor& h0, const BackboneParams& params);

}  // namespace gwsm
