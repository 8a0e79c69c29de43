#include <algorithm>
#include <cmath>

#include "dataeval/shapes.hpp"
#include "doctest.h"
#include "numcore/errors.hpp"
#include "numcore/ops.hpp"
#include "oracles.hpp"
#include "training/trainer.hpp"

using namespace gwsm;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.channels = 8;
  c.d = 2;
  c.epochs = 1;
  return c;
}

Dataset small_dataset(std::size_t n, std::uint64_t seed = 3, std::size_t canvas = 16) {
  ShapesConfig sc;
  sc.size = n;
  sc.seed = seed;
  sc.canvas = canvas;
  return generate_dataset(sc);
}

std::vector<const ImageSample*> pointers(const Dataset& ds, std::size_t k) {
  std::vector<const ImageSample*> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(&ds[i]);
  return out;
}

}  // namespace

TEST_CASE("config defaults") {
  const TrainConfig c;
  CHECK(c.K == 4);
  CHECK(c.T == 3);
  CHECK(c.delta_r == 0.8);
  CHECK(c.delta_d == 0.7);
  CHECK(c.lambda == 0.4);
  CHECK(c.d == 4);
  CHECK(c.epochs == 15);
  CHECK(c.lr_backbone == 1e-3);
  CHECK(c.lr_gnn == 1e-2);
  CHECK(c.lr_decay_factor == 0.1);
  CHECK(c.lr_decay_every == 5);
  CHECK(c.momentum == 0.9);
  CHECK(c.weight_decay == 5e-4);
  CHECK(c.channels == 64);
  CHECK(c.graph_dropout);
}

TEST_CASE("config text round trip and errors") {
  TrainConfig c;
  c.set("K", "3");
  c.set("delta_d", "0.55");
  c.set("graph_dropout", "false");
  c.set("lr_gnn", "0.0123456789012345");
  const TrainConfig back = TrainConfig::from_text(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.K == 3);
  CHECK(back.delta_d == 0.55);
  CHECK_FALSE(back.graph_dropout);
  CHECK(back.lr_gnn == 0.0123456789012345);
  CHECK_THROWS_AS(c.set("nonsense", "1"), DataError);
  CHECK_THROWS_AS(c.set("K", "three"), DataError);
  CHECK_THROWS_AS(TrainConfig::from_text("K 4\n"), DataError);
  TrainConfig bad;
  bad.delta_r = 1.5;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = TrainConfig{};
  bad.K = 0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = TrainConfig{};
  bad.theta_bg = 0.5;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  const std::string text = TrainConfig{}.to_text();
  for (const auto& key : TrainConfig::keys()) CHECK(text.find(key + " = ") != std::string::npos);
}

TEST_CASE("learning-rate schedule") {
  const TrainConfig c;
  CHECK(c.lr_at(c.lr_backbone, 0) == 1e-3);
  CHECK(c.lr_at(c.lr_backbone, 4) == 1e-3);
  CHECK(std::abs(c.lr_at(c.lr_backbone, 5) - 1e-4) < 1e-18);
  CHECK(std::abs(c.lr_at(c.lr_gnn, 10) - 1e-4) < 1e-18);
}

TEST_CASE("sigmoid_ce examples") {
  const Label label{1, 0, 1, 0, 0, 1};
  CHECK(std::abs(sigmoid_ce(Tensor::zeros({6}), label).item() - std::log(2.0)) < 1e-15);
  CHECK(sigmoid_ce(Tensor::full({1}, 100.0), Label{1}).item() < 1e-40);
  CHECK(std::isfinite(sigmoid_ce(Tensor::full({1}, -1000.0), Label{1}).item()));
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor logits = Tensor::randn({6}, rng, 3.0);
    Label l(6);
    for (auto& v : l) v = rng.below(2);
    CHECK(std::abs(sigmoid_ce(logits, l).item() - oracle::sigmoid_ce(oracle::to_vec(logits), l)) < 1e-12);
  }
  CHECK_THROWS_AS(sigmoid_ce(Tensor::zeros({5}), label), DimensionError);
}

TEST_CASE("total_loss examples") {
  Rng rng(2);
  const std::vector<Label> labels{{1, 0, 0}, {0, 1, 1}};
  const std::vector<Tensor> lg{Tensor::randn({3}, rng, 1.0), Tensor::randn({3}, rng, 1.0)};
  const std::vector<Tensor> lm{Tensor::randn({3}, rng, 1.0), Tensor::randn({3}, rng, 1.0)};
  const double ce_g = (sigmoid_ce(lg[0], labels[0]).item() + sigmoid_ce(lg[1], labels[1]).item()) / 2.0;
  CHECK(std::abs(total_loss(lg, lm, labels, 0.0).item() - ce_g) < 1e-15);
  CHECK(std::abs(total_loss(lg, lg, labels, 0.4).item() - 1.4 * ce_g) < 1e-14);

  // Logits with CE exactly 1: softplus(x) - l·x = 1 for x = ln(e - 1), l = 0.
  const double x = std::log(std::exp(1.0) - 1.0);
  const std::vector<Tensor> unit{Tensor::full({1}, x)};
  const std::vector<Label> neg{{0}};
  CHECK(std::abs(total_loss(unit, unit, neg, 0.4).item() - 1.4) < 1e-14);

  // Mean over the group is order invariant.
  const std::vector<Tensor> lg_rev{lg[1], lg[0]}, lm_rev{lm[1], lm[0]};
  const std::vector<Label> lab_rev{labels[1], labels[0]};
  CHECK(std::abs(total_loss(lg, lm, labels, 0.4).item() - total_loss(lg_rev, lm_rev, lab_rev, 0.4).item()) < 1e-15);
  CHECK_THROWS_AS(total_loss(lg, lm, labels, -1.0), ContractError);
}

TEST_CASE("sgd_step examples") {
  {
    Tensor p({2}, {1.0, -2.0}, true);
    Tape tape;
    {
      TapeScope s(tape);
      tape.backward(sum(scale(p, 3.0)));
    }
    std::vector<Tensor> params{p};
    std::vector<std::vector<double>> v;
    sgd_step(params, v, 0.1, 0.0, 0.0);
    CHECK(std::abs(p[0] - (1.0 - 0.3)) < 1e-15);
    CHECK(std::abs(p[1] - (-2.0 - 0.3)) < 1e-15);
  }
  {
    Tensor p({2}, {1.0, -2.0}, true);
    std::vector<Tensor> params{p};
    std::vector<std::vector<double>> v;
    for (int i = 0; i < 100; ++i) sgd_step(params, v, 0.1, 0.9, 0.0);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == -2.0);
  }
  {
    // f = |x|^2, v <- 0.9 v + 2x.
    Tensor p({3}, {1.0, -0.5, 2.0}, true);
    std::vector<Tensor> params{p};
    std::vector<std::vector<double>> v;
    int steps = 0;
    for (; steps < 500; ++steps) {
      p.zero_grad();
      Tape tape;
      {
        TapeScope s(tape);
        tape.backward(sum(mul(p, p)));
      }
      sgd_step(params, v, 0.1, 0.9, 0.0);
      if (std::abs(p[0]) < 1e-6 && std::abs(p[1]) < 1e-6 && std::abs(p[2]) < 1e-6) break;
    }
    CHECK(steps < 500);
  }
  {
    Tensor p({1}, {2.0}, true);
    std::vector<Tensor> params{p};
    std::vector<std::vector<double>> v;
    sgd_step(params, v, 0.5, 0.9, 0.1);
    CHECK(std::abs(p[0] - (2.0 - 0.5 * 0.2)) < 1e-15);
  }
}

TEST_CASE("group loss is invariant to group order") {
  const auto ds = small_dataset(4);
  const Model model = Model::init(small_config());
  auto group = pointers(ds, 4);
  const auto opt = run_options(model.config, DropoutMode::train, 9);
  const double base = group_loss(model, group, opt);
  std::reverse(group.begin(), group.end());
  CHECK(std::abs(group_loss(model, group, opt) - base) < 1e-12);
  std::swap(group[0], group[2]);
  CHECK(std::abs(group_loss(model, group, opt) - base) < 1e-12);
}

TEST_CASE("one small step decreases the loss on a fixed batch") {
  const auto ds = small_dataset(4, 5);
  const auto group = pointers(ds, 4);
  for (double lr : {1e-3, 1e-4}) {
    Model model = Model::init(small_config());
    const auto opt = run_options(model.config, DropoutMode::eval, 0);
    std::vector<std::vector<double>> vb, vg;
    const double before = train_step(model, group, opt, lr, lr, vb, vg);
    const double after = group_loss(model, group, opt);
    CHECK(after < before);
  }
}

TEST_CASE("training descends and is deterministic") {
  const auto ds = small_dataset(32, 11);
  TrainConfig c = small_config();
  c.epochs = 2;
  c.seed = 4;
  std::size_t calls = 0;
  const auto a = train(ds, c, [&](const BatchRecord&) { ++calls; });
  CHECK(calls == 16);
  REQUIRE(a.log.epochs.size() == 2);
  CHECK(a.log.epochs[1].loss < a.log.epochs[0].loss);
  CHECK(a.log.batches.size() == 16);
  for (const auto& r : a.log.batches) {
    CHECK(r.acc_m >= 0.0);
    CHECK(r.acc_m <= 1.0);
  }
  const auto b = train(ds, c);
  const auto pa = a.model.named_parameters(), pb = b.model.named_parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(oracle::to_vec(pa[i].second) == oracle::to_vec(pb[i].second));
  c.seed = 5;
  const auto other = train(ds, c);
  CHECK(oracle::to_vec(other.model.gnn.P) != oracle::to_vec(a.model.gnn.P));
}

TEST_CASE("edge cases of train") {
  const auto ds = small_dataset(6, 13);
  TrainConfig c = small_config();
  c.K = 1;
  CHECK_NOTHROW(train(ds, c));
  c.K = 7;
  CHECK_THROWS_AS(train(ds, c), ContractError);
  c = small_config();
  c.lr_backbone = 1e12;
  c.lr_gnn = 1e12;
  c.epochs = 3;
  CHECK_THROWS_AS(train(ds, c), NumericError);
}

TEST_CASE("batch records format as tab-separated fields") {
  BatchRecord r;
  r.epoch = 2;
  r.batch = 7;
  r.loss = 0.5;
  r.acc_m = 0.25;
  r.acc_g = 1.0;
  const std::string line = format_record(r);
  CHECK(line.find("epoch=2\tbatch=7\tloss=0.5") == 0);
  CHECK(line.find("acc_m=0.25") != std::string::npos);
  CHECK(line.find("acc_g=1") != std::string::npos);
}
