#pragma once

#include <span>

#include "gnn/gnn.hpp"
#include "training/config.hpp"

namespace gwsm {

struct Model {
  TrainConfig config;
  BackboneParams backbone;
  GnnParams gnn;

  static Model init(const TrainConfig& config);
  NamedTensors named_parameters() const;
};

struct GroupForward {
  std::vector<HeadOutput> intermediate;  // l^m and its class map, per node
  GnnOutput graph;                       // l^g and its class map, per node
};

// Pixels are normalised as (x - mean) / std before the backbone.
inline constexpr double kInputMean = 0.5;
inline constexpr double kInputStd = 0.25;

// Backbone -> intermediate head and group graph -> T-step GNN -> graph head.
GroupForward forward_group(const Model& model, std::span<const ImageSample* const> samples,
                           const GnnRunOptions& options);

GnnRunOptions run_options(const TrainConfig& config, DropoutMode mode, std::uint64_t seed);

}  // namespace gwsm
