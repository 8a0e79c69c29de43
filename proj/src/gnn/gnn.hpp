#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "backbone/backbone.hpp"
#include "grouping/grouping.hpp"

namespace gwsm {

struct GnnConfig {
  std::size_t channels = 64;     // C, must be divisible by reduction and by 8
  std::size_t reduction = 4;     // d
  std::size_t num_classes = 6;   // L
};

struct GnnParams {
  GnnConfig config;
  Tensor P, Q;                   // [C×C/d] low-rank edge factors
  Tensor phi_f, phi_g;           // [C/8×C×1×1]
  Tensor phi_h;                  // [C×C×1×1]
  Tensor gru_z_w, gru_z_b;       // update gate, [C×2C×3×3]
  Tensor gru_r_w, gru_r_b;       // reset gate
  Tensor gru_c_w, gru_c_b;       // candidate
  ClassHead readout;             // φ_r

  static GnnParams init(const GnnConfig& config, Rng& rng);
  NamedTensors named_parameters() const;
};

struct EdgeAffinity {
  Tensor matrix;  // [WH×WH], rows indexed by positions of the source node
};

struct SelfEdgeFeature {
  Tensor feature;  // [C×H×W]
};

// e = (h_i P)(h_j Q)ᵀ with h_i, h_j flattened to [WH×C].
EdgeAffinity edge_affinity_lowrank(const Tensor& h_i, const Tensor& h_j, const Tensor& P, const Tensor& Q);
// e = h_i W h_jᵀ, the full bilinear form.
EdgeAffinity edge_affinity_full(const Tensor& h_i, const Tensor& h_j, const Tensor& W);

struct EdgeCosts {
  std::uint64_t params_full = 0;
  std::uint64_t params_lowrank = 0;
  std::uint64_t mults_full = 0;
  std::uint64_t mults_lowrank = 0;
};

EdgeCosts count_costs(std::uint64_t width, std::uint64_t height, std::uint64_t channels, std::uint64_t reduction);

// softmax(φ_f(h) φ_g(h)ᵀ) φ_h(h) + h over the WH positions of one node.
SelfEdgeFeature self_edge(const Tensor& h, const GnnParams& params);

// row_softmax(e_ij) · h_j, [WH×C].
Tensor cross_message(const EdgeAffinity& e_ij, const Tensor& h_j_rows);

// Affinities of every linked ordered pair at one step. Each unordered pair is
// computed once with the smaller sample id as the source; the reverse
// direction is its transpose.
class EdgeSet {
 public:
  static EdgeSet compute(const GroupGraph& graph, std::span<const Tensor> rows, const GnnParams& params);

  const EdgeAffinity& get(std::size_t i, std::size_t j) const;
  bool contains(std::size_t i, std::size_t j) const { return edges_.count({i, j}) != 0; }
  std::size_t size() const { return edges_.size(); }

 private:
  std::map<std::pair<std::size_t, std::size_t>, EdgeAffinity> edges_;
};

// m_i = Σ_{j ∈ N(i)} m_{j,i} + m_{i,i}, neighbours summed in sample-id order.
Tensor aggregate_messages(const GroupGraph& graph, const EdgeSet& edges, std::span<const SelfEdgeFeature> self_edges,
                          std::span<const Tensor> rows, std::size_t i);

Tensor conv_gru_update(const Tensor& h_prev, const Tensor& message, const GnnParams& params);

enum class DropoutMode { train, eval, disabled };
enum class DropoutBranch { importance, drop, identity };

struct DropoutMask {
  Tensor s;  // [H×W]
  DropoutBranch branch;
};

struct DropoutResult {
  Tensor features;
  DropoutMask mask;
};

// Channel-mean map o; importance branch s = sigmoid(o), drop branch
// s = o·1(o < max(o)·δ_d). Training draws r ~ U[0,1) from rng and takes the
// importance branch iff r < δ_r; eval always takes it; disabled uses s = 1.
DropoutResult graph_dropout(const Tensor& h, double drop_rate, double drop_threshold, Rng& rng, DropoutMode mode);

// Fixed-branch variant used when the draw is made elsewhere.
DropoutResult graph_dropout_branch(const Tensor& h, double drop_threshold, DropoutBranch branch);

HeadOutput graph_readout(const Tensor& h_final, const ClassHead& head);

struct GnnRunOptions {
  std::size_t steps = 3;          // T
  double drop_rate = 0.8;         // δ_r
  double drop_threshold = 0.7;    // δ_d
  std::uint64_t seed = 0;
  DropoutMode mode = DropoutMode::train;
};

struct GnnOutput {
  std::vector<Tensor> final_states;                 // ĥ^T per node
  std::vector<HeadOutput> readouts;                 // l^g and class map per node
  std::vector<std::vector<DropoutBranch>> branches; // [node][step]
};

// Per-node dropout draw for (seed, sample id, step).
double dropout_draw(std::uint64_t seed, std::int64_t sample_id, std::size_t step);

GnnOutput run_gnn(const GroupGraph& graph, const GnnParams& params, const GnnRunOptions& options);

}  // namespace gwsm
