#include "training/trainer.hpp"

#include <cmath>
#include <sstream>

#include "numcore/errors.hpp"

namespace gwsm {

namespace {

// Backbone convolutions train at lr_backbone; the GNN and both class heads at lr_gnn.
void split_groups(const Model& model, std::vector<Tensor>& backbone, std::vector<Tensor>& rest) {
  const auto& b = model.backbone;
  backbone = {b.conv1_w, b.conv1_b, b.conv2_w, b.conv2_b, b.conv3_w, b.conv3_b, b.conv4_w, b.conv4_b};
  rest = tensors_of(model.gnn.named_parameters());
  rest.push_back(b.intermediate.weight);
  rest.push_back(b.intermediate.bias);
}

std::vector<Label> labels_in(std::span<const ImageSample* const> group) {
  std::vector<Label> labels;
  for (const auto* s : group) labels.push_back(s->label);
  return labels;
}

Tensor loss_of(const GroupForward& fwd, std::span<const Label> labels, double lambda, std::vector<Tensor>* lg_out,
               std::vector<Tensor>* lm_out) {
  std::vector<Tensor> lg, lm;
  for (const auto& r : fwd.graph.readouts) lg.push_back(r.logits);
  for (const auto& r : fwd.intermediate) lm.push_back(r.logits);
  Tensor loss = total_loss(lg, lm, labels, lambda);
  if (lg_out) *lg_out = std::move(lg);
  if (lm_out) *lm_out = std::move(lm);
  return loss;
}

}  // namespace

Tensor sigmoid_ce(const Tensor& logits, const Label& label) {
  if (logits.rank() != 1 || logits.dim(0) != label.size()) {
    throw DimensionError("sigmoid_ce: logits " + shape_str(logits.shape()) + " vs " + std::to_string(label.size()) +
                         " classes");
  }
  std::vector<double> target(label.begin(), label.end());
  const Tensor l(logits.shape(), std::move(target));
  return mean(sub(softplus(logits), mul(l, logits)));
}

Tensor total_loss(std::span<const Tensor> graph_logits, std::span<const Tensor> intermediate_logits,
                  std::span<const Label> labels, double lambda) {
  if (lambda < 0.0) throw ContractError("total_loss: lambda must be non-negative");
  if (graph_logits.size() != labels.size() || intermediate_logits.size() != labels.size() || labels.empty()) {
    throw DimensionError("total_loss: logits and labels differ in count");
  }
  Tensor total;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Tensor term = add(sigmoid_ce(graph_logits[i], labels[i]), scale(sigmoid_ce(intermediate_logits[i], labels[i]), lambda));
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, 1.0 / static_cast<double>(labels.size()));
}

void sgd_step(std::span<Tensor> params, std::vector<std::vector<double>>& velocity, double lr, double momentum,
              double weight_decay) {
  if (velocity.empty()) {
    for (const auto& p : params) velocity.emplace_back(p.numel(), 0.0);
  }
  if (velocity.size() != params.size()) throw DimensionError("sgd_step: velocity and params differ in count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_data();
    auto& v = velocity[i];
    if (v.size() != values.size()) throw DimensionError("sgd_step: velocity shape mismatch");
    const bool has_grad = params[i].has_grad();
    const auto grad = has_grad ? params[i].grad() : std::span<const double>{};
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = has_grad ? grad[j] : 0.0;
      v[j] = momentum * v[j] + g + weight_decay * values[j];
      values[j] -= lr * v[j];
    }
  }
}

double multilabel_accuracy(std::span<const Tensor> logits, std::span<const Label> labels) {
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    for (std::size_t c = 0; c < labels[i].size(); ++c) {
      correct += ((logits[i][c] > 0.0) == (labels[i][c] != 0)) ? 1 : 0;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

std::string format_record(const BatchRecord& r) {
  std::ostringstream os;
  os << "epoch=" << r.epoch << "\tbatch=" << r.batch << "\tloss=" << format_double(r.loss)
     << "\tacc_m=" << format_double(r.acc_m) << "\tacc_g=" << format_double(r.acc_g);
  return os.str();
}

double group_loss(const Model& model, std::span<const ImageSample* const> group, const GnnRunOptions& options) {
  TapeScope paused(nullptr);
  const auto labels = labels_in(group);
  return loss_of(forward_group(model, group, options), labels, model.config.lambda, nullptr, nullptr).item();
}

double train_step(Model& model, std::span<const ImageSample* const> group, const GnnRunOptions& options,
                  double lr_backbone, double lr_gnn, std::vector<std::vector<double>>& velocity_backbone,
                  std::vector<std::vector<double>>& velocity_gnn, BatchRecord* record) {
  std::vector<Tensor> backbone_params, gnn_params;
  split_groups(model, backbone_params, gnn_params);
  for (auto& p : backbone_params) p.zero_grad();
  for (auto& p : gnn_params) p.zero_grad();

  const auto labels = labels_in(group);
  Tape tape;
  double loss_value = 0.0;
  {
    TapeScope scope(tape);
    std::vector<Tensor> lg, lm;
    const Tensor loss = loss_of(forward_group(model, group, options), labels, model.config.lambda, &lg, &lm);
    loss_value = loss.item();
    if (!std::isfinite(loss_value)) throw NumericError("non-finite training loss");
    tape.backward(loss);
    if (record) {
      record->loss = loss_value;
      record->acc_m = multilabel_accuracy(lm, labels);
      record->acc_g = multilabel_accuracy(lg, labels);
    }
  }
  const auto& c = model.config;
  sgd_step(backbone_params, velocity_backbone, lr_backbone, c.momentum, c.weight_decay);
  sgd_step(gnn_params, velocity_gnn, lr_gnn, c.momentum, c.weight_decay);
  for (auto& p : backbone_params) p.zero_grad();
  for (auto& p : gnn_params) p.zero_grad();
  return loss_value;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, const BatchCallback& on_batch) {
  config.validate();
  if (dataset.size() < config.K) throw ContractError("train: dataset smaller than group size K");
  TrainResult result{Model::init(config), {}};
  Model& model = result.model;
  const auto labels = labels_of(dataset);
  std::vector<std::vector<double>> v_backbone, v_gnn;
  Rng sampler_rng(mix_seed(config.seed, 0x5a3b1e));

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr_b = config.lr_at(config.lr_backbone, epoch);
    const double lr_g = config.lr_at(config.lr_gnn, epoch);
    const auto batches = epoch_batches(labels, config.K, sampler_rng);
    EpochRecord summary;
    summary.epoch = epoch;
    summary.lr_backbone = lr_b;
    summary.lr_gnn = lr_g;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const ImageSample*> group;
      for (auto idx : batches[b]) group.push_back(&dataset[idx]);
      const std::uint64_t dropout_seed = mix_seed(config.seed, (epoch << 32) | b);
      BatchRecord record;
      record.epoch = epoch;
      record.batch = b;
      train_step(model, group, run_options(config, DropoutMode::train, dropout_seed), lr_b, lr_g, v_backbone, v_gnn,
                 &record);
      summary.loss += record.loss;
      summary.acc_m += record.acc_m;
      summary.acc_g += record.acc_g;
      result.log.batches.push_back(record);
      if (on_batch) on_batch(record);
    }
    if (!batches.empty()) {
      const auto n = static_cast<double>(batches.size());
      summary.loss /= n;
      summary.acc_m /= n;
      summary.acc_g /= n;
    }
    result.log.epochs.push_back(summary);
  }
  return result;
}

}  // namespace gwsm
