#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "training/model.hpp"

namespace gwsm {

// Mean over classes of the sigmoid cross entropy, via softplus(x) - l·x.
Tensor sigmoid_ce(const Tensor& logits, const Label& label);

// Mean over the group of CE(l^g, l) + λ·CE(l^m, l).
Tensor total_loss(std::span<const Tensor> graph_logits, std::span<const Tensor> intermediate_logits,
                  std::span<const Label> labels, double lambda);

// v <- momentum·v + grad + weight_decay·param; param <- param - lr·v.
// velocity is resized on first use; params without a gradient count as zero-grad.
void sgd_step(std::span<Tensor> params, std::vector<std::vector<double>>& velocity, double lr, double momentum,
              double weight_decay);

// Fraction of (image, class) pairs where sign(logit) agrees with the label.
double multilabel_accuracy(std::span<const Tensor> logits, std::span<const Label> labels);

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
  double acc_m = 0.0;
  double acc_g = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double acc_m = 0.0;
  double acc_g = 0.0;
  double lr_backbone = 0.0;
  double lr_gnn = 0.0;
};

struct TrainLog {
  std::vector<BatchRecord> batches;
  std::vector<EpochRecord> epochs;
};

std::string format_record(const BatchRecord& record);

struct TrainResult {
  Model model;
  TrainLog log;
};

using BatchCallback = std::function<void(const BatchRecord&)>;

// Greedy groups of K per step, two SGD parameter groups (backbone vs. GNN and
// graph head), step decay of both learning rates. Deterministic in config.seed.
// Throws NumericError on a non-finite loss.
TrainResult train(const Dataset& dataset, const TrainConfig& config, const BatchCallback& on_batch = {});

// One optimisation step on a fixed group; returns the loss before the step.
double train_step(Model& model, std::span<const ImageSample* const> group, const GnnRunOptions& options,
                  double lr_backbone, double lr_gnn, std::vector<std::vector<double>>& velocity_backbone,
                  std::vector<std::vector<double>>& velocity_gnn, BatchRecord* record = nullptr);

double group_loss(const Model& model, std::span<const ImageSample* const> group, const GnnRunOptions& options);

}  // namespace gwsm
