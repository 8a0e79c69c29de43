#include "grouping/grouping.hpp"

#include <algorithm>
#include <numeric>

#include "numcore/errors.hpp"

namespace gwsm {

std::size_t label_overlap(const Label& a, const Label& b) {
  if (a.size() != b.size()) throw DimensionError("label_overlap: label lengths differ");
  std::size_t n = 0;
  for (std::size_t c = 0; c < a.size(); ++c) n += (a[c] && b[c]) ? 1 : 0;
  return n;
}

std::size_t label_count(const Label& a) {
  return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](auto v) { return v != 0; }));
}

GroupGraph::GroupGraph(std::vector<GraphNode> nodes, std::vector<std::uint8_t> adjacency)
    : nodes_(std::move(nodes)), adjacency_(std::move(adjacency)) {
  if (nodes_.empty()) throw ContractError("group graph needs at least one node");
  if (adjacency_.size() != nodes_.size() * nodes_.size()) throw DimensionError("adjacency is not K×K");
}

std::vector<std::size_t> GroupGraph::neighbours(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (j != i && linked(i, j)) out.push_back(j);
  }
  std::sort(out.begin(), out.end(),
            [&](std::size_t a, std::size_t b) { return nodes_[a].sample_id < nodes_[b].sample_id; });
  return out;
}

GroupGraph build_graph(std::span<const std::int64_t> ids, std::span<const Label> labels,
                       std::span<const Tensor> states) {
  const std::size_t k = ids.size();
  if (k == 0) throw ContractError("build_graph: empty group");
  if (labels.size() != k || states.size() != k) throw DimensionError("build_graph: ids, labels, states differ in length");
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < k; ++i) {
    if (states[i].shape() != states[0].shape()) throw DimensionError("build_graph: node states differ in shape");
    nodes.push_back({ids[i], states[i]});
  }
  std::vector<std::uint8_t> adjacency(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      adjacency[i * k + j] = (i == j || label_overlap(labels[i], labels[j]) > 0) ? 1 : 0;
    }
  }
  return GroupGraph(std::move(nodes), std::move(adjacency));
}

GroupGraph build_graph(std::span<const ImageSample* const> samples, std::span<const Tensor> states) {
  std::vector<std::int64_t> ids;
  std::vector<Label> labels;
  for (const auto* s : samples) {
    ids.push_back(s->id);
    labels.push_back(s->label);
  }
  return build_graph(ids, labels, states);
}

GreedySampler::GreedySampler(std::span<const Label> labels) : labels_(labels), unused_(labels.size()) {
  std::iota(unused_.begin(), unused_.end(), std::size_t{0});
}

std::vector<std::size_t> GreedySampler::take(std::size_t k, Rng& rng) {
  const auto seed_pos = static_cast<std::size_t>(rng.below(unused_.size()));
  const std::size_t seed = unused_[seed_pos];
  unused_.erase(unused_.begin() + static_cast<std::ptrdiff_t>(seed_pos));

  // Random order first, then a stable sort by overlap: equal overlaps end up
  // in uniformly random relative order.
  shuffle_in_place(unused_, rng);
  std::vector<std::size_t> overlap(labels_.size(), 0);
  for (auto idx : unused_) overlap[idx] = label_overlap(labels_[seed], labels_[idx]);
  const std::size_t picks = std::min(k - 1, unused_.size());
  std::stable_sort(unused_.begin(), unused_.end(),
                   [&](std::size_t a, std::size_t b) { return overlap[a] > overlap[b]; });

  std::vector<std::size_t> group{seed};
  group.insert(group.end(), unused_.begin(), unused_.begin() + static_cast<std::ptrdiff_t>(picks));
  unused_.erase(unused_.begin(), unused_.begin() + static_cast<std::ptrdiff_t>(picks));
  // Keep the pool in a canonical order so later seeds depend only on the rng.
  std::sort(unused_.begin(), unused_.end());
  return group;
}

std::optional<std::vector<std::size_t>> GreedySampler::next(std::size_t k, Rng& rng) {
  if (k == 0) throw ContractError("group size must be at least 1");
  if (unused_.size() < k) return std::nullopt;
  return take(k, rng);
}

std::optional<std::vector<std::size_t>> GreedySampler::next_partial(std::size_t k, Rng& rng) {
  if (k == 0) throw ContractError("group size must be at least 1");
  if (unused_.empty()) return std::nullopt;
  return take(k, rng);
}

std::vector<Label> labels_of(const Dataset& dataset) {
  std::vector<Label> labels;
  labels.reserve(dataset.size());
  for (const auto& s : dataset) labels.push_back(s.label);
  return labels;
}

std::vector<const ImageSample*> greedy_sample(const Dataset& dataset, std::size_t k, Rng& rng) {
  if (dataset.size() < k) throw ContractError("greedy_sample: dataset smaller than group size");
  const auto labels = labels_of(dataset);
  GreedySampler sampler(labels);
  std::vector<const ImageSample*> out;
  for (auto idx : *sampler.next(k, rng)) out.push_back(&dataset[idx]);
  return out;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::span<const Label> labels, std::size_t k, Rng& rng) {
  GreedySampler sampler(labels);
  std::vector<std::vector<std::size_t>> batches;
  while (auto group = sampler.next(k, rng)) batches.push_back(std::move(*group));
  return batches;
}

std::vector<std::vector<std::size_t>> epoch_batches(const Dataset& dataset, std::size_t k, Rng& rng) {
  const auto labels = labels_of(dataset);
  return epoch_batches(labels, k, rng);
}

std::vector<std::vector<std::size_t>> covering_groups(const Dataset& dataset, std::size_t k, Rng& rng) {
  const auto labels = labels_of(dataset);
  GreedySampler sampler(labels);
  std::vector<std::vector<std::size_t>> groups;
  while (auto group = sampler.next_partial(k, rng)) groups.push_back(std::move(*group));
  return groups;
}

}  // namespace gwsm
