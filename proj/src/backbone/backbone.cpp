#include "backbone/backbone.hpp"

#include "numcore/errors.hpp"

namespace gwsm {

ClassHead ClassHead::init(std::size_t num_classes, std::size_t channels, Rng& rng) {
  return {he_kernel(num_classes, channels, 1, rng, 1.0), Tensor::zeros({num_classes}, true)};
}

HeadOutput apply_head(const Tensor& features, const ClassHead& head) {
  Tensor map = conv2d(features, head.weight, head.bias);
  Tensor logits = global_average_pool(map);
  return {std::move(map), std::move(logits)};
}

BackboneParams BackboneParams::init(const BackboneConfig& config, Rng& rng) {
  BackboneParams p;
  p.config = config;
  p.conv1_w = he_kernel(config.width1, 3, 3, rng);
  p.conv1_b = Tensor::zeros({config.width1}, true);
  p.conv2_w = he_kernel(config.width2, config.width1, 3, rng);
  p.conv2_b = Tensor::zeros({config.width2}, true);
  p.conv3_w = he_kernel(config.width3, config.width2, 3, rng);
  p.conv3_b = Tensor::zeros({config.width3}, true);
  p.conv4_w = he_kernel(config.embed_channels, config.width3, 3, rng);
  p.conv4_b = Tensor::zeros({config.embed_channels}, true);
  p.intermediate = ClassHead::init(config.num_classes, config.embed_channels, rng);
  return p;
}

NamedTensors BackboneParams::named_parameters() const {
  return {{"backbone.conv1.w", conv1_w},       {"backbone.conv1.b", conv1_b},
          {"backbone.conv2.w", conv2_w},       {"backbone.conv2.b", conv2_b},
          {"backbone.conv3.w", conv3_w},       {"backbone.conv3.b", conv3_b},
          {"backbone.conv4.w", conv4_w},       {"backbone.conv4.b", conv4_b},
          {"backbone.head_m.w", intermediate.weight}, {"backbone.head_m.b", intermediate.bias}};
}

Tensor extract_features(const Tensor& image, const BackboneParams& params) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("extract_features: expected a 3-channel image, got " + shape_str(image.shape()));
  }
  if (image.dim(1) % 4 != 0 || image.dim(2) % 4 != 0) {
    throw DimensionError("extract_features: image size " + shape_str(image.shape()) + " not divisible by 4");
  }
  const Conv2dOptions same{1, 1, 1};
  Tensor x = max_pool2d(relu(conv2d(image, params.conv1_w, params.conv1_b, same)));
  x = max_pool2d(relu(conv2d(x, params.conv2_w, params.conv2_b, same)));
  x = relu(conv2d(x, params.conv3_w, params.conv3_b, same));
  return relu(conv2d(x, params.conv4_w, params.conv4_b, {1, 2, 2}));
}

HeadOutput intermediate_readout(const Tensor& h0, const BackboneParams& params) {
  return apply_head(h0, params.intermediate);
}

}  // namespace gwsm
