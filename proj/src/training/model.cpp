#include "training/model.hpp"

namespace gwsm {

Model Model::init(const TrainConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, 0x5eed));
  Model m;
  m.config = config;
  BackboneConfig bc;
  bc.embed_channels = config.channels;
  bc.num_classes = config.num_classes;
  m.backbone = BackboneParams::init(bc, rng);
  GnnConfig gc;
  gc.channels = config.channels;
  gc.reduction = config.d;
  gc.num_classes = config.num_classes;
  m.gnn = GnnParams::init(gc, rng);
  return m;
}

NamedTensors Model::named_parameters() const {
  NamedTensors all = backbone.named_parameters();
  for (auto& p : gnn.named_parameters()) all.push_back(std::move(p));
  return all;
}

GroupForward forward_group(const Model& model, std::span<const ImageSample* const> samples,
                           const GnnRunOptions& options) {
  GroupForward out;
  std::vector<Tensor> states;
  for (const auto* sample : samples) {
    Tensor h0 = extract_features(scale(add_scalar(sample->image, -kInputMean), 1.0 / kInputStd), model.backbone);
    out.intermediate.push_back(intermediate_readout(h0, model.backbone));
    states.push_back(std::move(h0));
  }
  const GroupGraph graph = build_graph(samples, states);
  out.graph = run_gnn(graph, model.gnn, options);
  return out;
}

GnnRunOptions run_options(const TrainConfig& config, DropoutMode mode, std::uint64_t seed) {
  GnnRunOptions o;
  o.steps = config.T;
  o.drop_rate = config.delta_r;
  o.drop_threshold = config.delta_d;
  o.seed = seed;
  o.mode = config.graph_dropout ? mode : DropoutMode::disabled;
  return o;
}

}  // namespace gwsm
