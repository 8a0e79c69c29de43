#include <algorithm>

#include "camgen/camgen.hpp"
#include "dataeval/shapes.hpp"
#include "doctest.h"
#include "numcore/errors.hpp"
#include "oracles.hpp"

using namespace gwsm;

TEST_CASE("extract_cam examples") {
  const Label present{1};
  const Tensor constant = extract_cam(Tensor::full({1, 3, 3}, 2.5), present);
  for (double v : constant.data()) CHECK(v == 1.0);
  const Tensor negative = extract_cam(Tensor::full({1, 2, 2}, -1.0), present);
  for (double v : negative.data()) CHECK(v == 0.0);
  const Tensor m = extract_cam(Tensor({1, 2, 2}, {2, 1, 0, -1}), present);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 0.5);
  CHECK(m[2] == 0.0);
  CHECK(m[3] == 0.0);

  const Tensor two = extract_cam(Tensor({2, 1, 2}, {3, 1, 4, 2}), Label{0, 1});
  CHECK(two[0] == 0.0);
  CHECK(two[1] == 0.0);
  CHECK(two[2] == 1.0);
  CHECK(two[3] == 0.5);
  CHECK_THROWS_AS(extract_cam(Tensor::zeros({2, 2, 2}), present), DimensionError);
}

TEST_CASE("extract_cam properties") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Label label(4);
    for (auto& l : label) l = rng.below(2);
    const Tensor raw = Tensor::randn({4, 3, 3}, rng, 1.0);
    const Tensor cam = extract_cam(raw, label);
    const Tensor again = extract_cam(cam, label);
    CHECK(oracle::max_abs_diff(cam, again) < 1e-15);
    for (std::size_t c = 0; c < 4; ++c) {
      double peak = 0.0, raw_peak = -1e300;
      for (std::size_t p = 0; p < 9; ++p) {
        CHECK(cam[c * 9 + p] >= 0.0);
        CHECK(cam[c * 9 + p] <= 1.0);
        peak = std::max(peak, cam[c * 9 + p]);
        raw_peak = std::max(raw_peak, raw[c * 9 + p]);
      }
      if (!label[c] || raw_peak <= 0.0) CHECK(peak == 0.0);
      else CHECK(peak == 1.0);
    }
  }
}

TEST_CASE("ensemble examples") {
  Rng rng(2);
  const Tensor a = Tensor::uniform({2, 2, 2}, rng, 0.0, 1.0), b = Tensor::uniform({2, 2, 2}, rng, 0.0, 1.0);
  CHECK(oracle::max_abs_diff(ensemble(a, a), a) == 0.0);
  const Tensor half = ensemble(a, Tensor::zeros(a.shape()));
  const Tensor mixed = ensemble(a, b);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    CHECK(half[i] == a[i] / 2.0);
    CHECK(mixed[i] == (a[i] + b[i]) / 2.0);
  }
  CHECK_THROWS_AS(ensemble(a, Tensor::zeros({2, 2, 1})), DimensionError);
}

TEST_CASE("make_pseudo_label examples") {
  const Label one{1};
  {
    const auto pl = make_pseudo_label(Tensor::zeros({1, 2, 2}), one, 0.3, 0.05, 8, 8);
    for (auto v : pl.mask) CHECK(v == 0);
  }
  {
    const auto pl = make_pseudo_label(Tensor::full({1, 2, 2}, 1.0), one, 0.3, 0.05, 8, 8);
    for (auto v : pl.mask) CHECK(v == 1);
  }
  {
    const auto pl = make_pseudo_label(Tensor({1, 2, 2}, {0.9, 0.5, 0.1, 0.9}), one, 0.6, 0.2, 2, 2);
    CHECK(pl.mask == std::vector<std::uint8_t>{1, kIgnoreLabel, 0, 1});
  }
  {
    // Nearest-neighbour upsampling 2×2 -> 4×4 replicates each cell into a block.
    const auto pl = make_pseudo_label(Tensor({1, 2, 2}, {0.9, 0.5, 0.1, 0.9}), one, 0.6, 0.2, 4, 4);
    const std::vector<std::uint8_t> expect{1, 1, 255, 255, 1, 1, 255, 255, 0, 0, 1, 1, 0, 0, 1, 1};
    CHECK(pl.mask == expect);
  }
  {
    // Ties go to the smallest class; absent classes never win.
    const Tensor cams({3, 1, 2}, {0.7, 0.2, 0.7, 0.9, 1.0, 1.0});
    const auto pl = make_pseudo_label(cams, Label{1, 1, 0}, 0.5, 0.1, 1, 2);
    CHECK(pl.mask == std::vector<std::uint8_t>{1, 2});
  }
  CHECK_THROWS_AS(make_pseudo_label(Tensor::zeros({1, 2, 2}), one, 0.2, 0.3, 2, 2), ContractError);
  CHECK_THROWS_AS(make_pseudo_label(Tensor::zeros({1, 2, 2}), one, 1.2, 0.3, 2, 2), ContractError);
  CHECK_THROWS_AS(make_pseudo_label(Tensor::zeros({1, 2, 2}), one, 0.3, 0.3, 2, 2), ContractError);
}

TEST_CASE("pseudo-label containment and monotonicity") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Label label(5, 0);
    label[rng.below(5)] = 1;
    for (auto& l : label)
      if (rng.uniform() < 0.3) l = 1;
    const Tensor cams = extract_cam(Tensor::randn({5, 3, 4}, rng, 1.0), label);
    const double bg = rng.uniform(0.0, 0.3);
    const double fg1 = rng.uniform(bg + 0.01, 1.0), fg2 = rng.uniform(fg1, 1.0);
    const auto a = make_pseudo_label(cams, label, fg1, bg, 6, 8);
    const auto b = make_pseudo_label(cams, label, fg2, bg, 6, 8);
    std::size_t fa = 0, fb = 0;
    for (std::size_t p = 0; p < a.mask.size(); ++p) {
      const auto v = a.mask[p];
      if (v != 0 && v != kIgnoreLabel) {
        ++fa;
        CHECK(label[v - 1] == 1);
      }
      if (b.mask[p] != 0 && b.mask[p] != kIgnoreLabel) ++fb;
    }
    CHECK(fb <= fa);
  }
}

TEST_CASE("compute_cams covers every sample with normalised maps") {
  ShapesConfig sc;
  sc.size = 7;
  sc.canvas = 16;
  const auto ds = generate_dataset(sc);
  TrainConfig c;
  c.channels = 8;
  c.d = 2;
  c.K = 3;
  const Model model = Model::init(c);
  const auto stacks = compute_cams(model, ds, 1);
  REQUIRE(stacks.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(stacks[i].sample_id == ds[i].id);
    CHECK(stacks[i].present_classes == ds[i].label);
    CHECK(stacks[i].cams_m.shape() == Shape{6, 4, 4});
    for (auto src : {CamSource::intermediate, CamSource::graph, CamSource::ensemble}) {
      const Tensor& cam = stacks[i].get(src);
      for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t p = 0; p < 16; ++p) {
          const double v = cam[k * 16 + p];
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
          if (!ds[i].label[k]) CHECK(v == 0.0);
        }
    }
    CHECK(oracle::max_abs_diff(stacks[i].cams_ens, ensemble(stacks[i].cams_m, stacks[i].cams_g)) == 0.0);
  }
  const auto again = compute_cams(model, ds, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(oracle::to_vec(again[i].cams_g) == oracle::to_vec(stacks[i].cams_g));
}

TEST_CASE("cam sources parse and print") {
  for (auto s : {CamSource::intermediate, CamSource::graph, CamSource::ensemble}) CHECK(parse_cam_source(to_string(s)) == s);
  CHECK_THROWS_AS(parse_cam_source("both"), ContractError);
}
