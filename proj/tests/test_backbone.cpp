#include "backbone/backbone.hpp"
#include "doctest.h"
#include "numcore/errors.hpp"
#include "numcore/gradcheck.hpp"
#include "numcore/ops.hpp"
#include "oracles.hpp"
#include "training/trainer.hpp"

using namespace gwsm;

namespace {

BackboneConfig small_config() {
  BackboneConfig c;
  c.embed_channels = 8;
  c.width1 = 4;
  c.width2 = 4;
  c.width3 = 6;
  return c;
}

}  // namespace

TEST_CASE("extract_features shape contract") {
  Rng rng(1);
  BackboneConfig config;
  config.embed_channels = 16;
  const auto params = BackboneParams::init(config, rng);
  const Tensor h = extract_features(Tensor::uniform({3, 32, 32}, rng, 0.0, 1.0), params);
  CHECK(h.shape() == Shape{16, 8, 8});
  for (std::size_t side : {4u, 8u, 12u, 20u}) {
    const Tensor hs = extract_features(Tensor::uniform({3, side, side + 4}, rng, 0.0, 1.0), params);
    CHECK(hs.shape() == Shape{16, side / 4, (side + 4) / 4});
    CHECK(intermediate_readout(hs, params).logits.shape() == Shape{6});
  }
  CHECK_THROWS_AS(extract_features(Tensor::zeros({3, 30, 32}), params), DimensionError);
  CHECK_THROWS_AS(extract_features(Tensor::zeros({1, 32, 32}), params), DimensionError);
}

TEST_CASE("zero image with zero biases gives a zero embedding") {
  Rng rng(2);
  const auto params = BackboneParams::init({}, rng);
  const Tensor h = extract_features(Tensor::zeros({3, 32, 32}), params);
  for (double v : h.data()) CHECK(v == 0.0);
}

TEST_CASE("embedding is reproducible bit for bit") {
  auto run = [] {
    Rng rng(42);
    const auto params = BackboneParams::init({}, rng);
    const Tensor image = Tensor::uniform({3, 32, 32}, rng, 0.0, 1.0);
    return oracle::to_vec(extract_features(image, params));
  };
  CHECK(run() == run());
}

TEST_CASE("intermediate readout examples") {
  Rng rng(3);
  auto params = BackboneParams::init(small_config(), rng);
  const Tensor h0 = Tensor::randn({8, 3, 3}, rng, 1.0);

  for (double& w : params.intermediate.weight.mutable_data()) w = 0.0;
  const Tensor zero_logits = intermediate_readout(h0, params).logits;
  for (double v : zero_logits.data()) CHECK(v == 0.0);

  // Class 0 picks channel 0, which is constant 2.
  params.intermediate.weight.mutable_data()[0] = 1.0;
  Tensor flat = Tensor::zeros({8, 3, 3});
  for (std::size_t p = 0; p < 9; ++p) flat.mutable_data()[p] = 2.0;
  CHECK(intermediate_readout(flat, params).logits[0] == 2.0);

  params = BackboneParams::init(small_config(), rng);
  for (double& b : params.intermediate.bias.mutable_data()) b = rng.normal();
  const auto out = intermediate_readout(h0, params);
  const auto& w = params.intermediate.weight;
  for (std::size_t l = 0; l < 6; ++l) {
    double mean = 0.0;
    for (std::size_t p = 0; p < 9; ++p) {
      double v = params.intermediate.bias[l];
      for (std::size_t c = 0; c < 8; ++c) v += w[l * 8 + c] * h0[c * 9 + p];
      CHECK(std::abs(out.class_map[l * 9 + p] - v) < 1e-12);
      mean += v / 9.0;
    }
    CHECK(std::abs(out.logits[l] - mean) < 1e-12);
  }
}

TEST_CASE("gradient of CE(l^m) with respect to the input image") {
  Rng rng(4);
  const auto params = BackboneParams::init(small_config(), rng);
  const Tensor image = Tensor::uniform({3, 8, 8}, rng, 0.0, 1.0, true);
  const Label label{1, 0, 0, 1, 0, 0};
  const double err = check_gradients(
      [&](const Tensor& x) { return sigmoid_ce(intermediate_readout(extract_features(x, params), params).logits, label); },
      image, 1e-5);
  CHECK(err < 1e-4);
}
