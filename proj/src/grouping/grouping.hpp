#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "numcore/tensor.hpp"

namespace gwsm {

// Multi-hot image-level label, one entry per class.
using Label = std::vector<std::uint8_t>;

std::size_t label_overlap(const Label& a, const Label& b);
std::size_t label_count(const Label& a);

struct ImageSample {
  std::int64_t id = 0;
  Tensor image;                   // [3×H₀×W₀], values in [0,1]
  Label label;                    // length L
  std::vector<std::uint8_t> gt_mask;  // H₀×W₀ class ids (0 = background); evaluation only
  std::size_t height = 0, width = 0;
};

using Dataset = std::vector<ImageSample>;

struct GraphNode {
  std::int64_t sample_id;
  Tensor state;  // [C×H×W]
};

class GroupGraph {
 public:
  GroupGraph(std::vector<GraphNode> nodes, std::vector<std::uint8_t> adjacency);

  std::size_t size() const { return nodes_.size(); }
  bool linked(std::size_t i, std::size_t j) const { return adjacency_[i * nodes_.size() + j] != 0; }
  const GraphNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  // Neighbours of i other than itself, ordered by sample id.
  std::vector<std::size_t> neighbours(std::size_t i) const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<std::uint8_t> adjacency_;
};

// Nodes linked iff their labels share a class; every node has a self-edge.
GroupGraph build_graph(std::span<const std::int64_t> ids, std::span<const Label> labels,
                       std::span<const Tensor> states);
GroupGraph build_graph(std::span<const ImageSample* const> samples, std::span<const Tensor> states);

// Greedy label-overlap grouping over a fixed pool, without replacement.
class GreedySampler {
 public:
  explicit GreedySampler(std::span<const Label> labels);

  // Seed drawn uniformly from the unused pool, then the K-1 unused items with
  // the largest overlap with the seed (ties broken uniformly at random).
  // nullopt once fewer than K items remain.
  std::optional<std::vector<std::size_t>> next(std::size_t k, Rng& rng);
  // Like next() but returns whatever is left (possibly fewer than k).
  std::optional<std::vector<std::size_t>> next_partial(std::size_t k, Rng& rng);

  std::size_t remaining() const { return unused_.size(); }

 private:
  std::vector<std::size_t> take(std::size_t k, Rng& rng);

  std::span<const Label> labels_;
  std::vector<std::size_t> unused_;
};

// One group of K samples drawn from the full dataset.
std::vector<const ImageSample*> greedy_sample(const Dataset& dataset, std::size_t k, Rng& rng);

// Partition of the dataset into greedy groups of exactly K; remainder dropped.
std::vector<std::vector<std::size_t>> epoch_batches(std::span<const Label> labels, std::size_t k, Rng& rng);
std::vector<std::vector<std::size_t>> epoch_batches(const Dataset& dataset, std::size_t k, Rng& rng);

// Greedy groups covering every sample; the last group may be smaller.
std::vector<std::vector<std::size_t>> covering_groups(const Dataset& dataset, std::size_t k, Rng& rng);

std::vector<Label> labels_of(const Dataset& dataset);

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace gwsm
