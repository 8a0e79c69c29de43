#include "gnn/gnn.hpp"

#include <algorithm>

#include "numcore/errors.hpp"

namespace gwsm {

namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string(name) + " must lie in [0,1]");
}

void check_rows(const Tensor& rows, std::size_t channels, const char* op) {
  if (rows.rank() != 2 || rows.dim(1) != channels) {
    throw DimensionError(std::string(op) + ": node rows " + shape_str(rows.shape()) + " do not have " +
                         std::to_string(channels) + " channels");
  }
}

Tensor one_minus(const Tensor& x) { return add_scalar(scale(x, -1.0), 1.0); }

}  // namespace

GnnParams GnnParams::init(const GnnConfig& config, Rng& rng) {
  const std::size_t c = config.channels;
  if (config.reduction == 0 || c % config.reduction != 0) throw ContractError("channels must be divisible by d");
  if (c % 8 != 0) throw ContractError("channels must be divisible by 8");
  const std::size_t low = c / config.reduction;
  const double factor_std = 1.0 / std::sqrt(static_cast<double>(c));
  GnnParams p;
  p.config = config;
  p.P = Tensor::randn({c, low}, rng, factor_std, true);
  p.Q = Tensor::randn({c, low}, rng, factor_std, true);
  p.phi_f = he_kernel(c / 8, c, 1, rng, 1.0);
  p.phi_g = he_kernel(c / 8, c, 1, rng, 1.0);
  p.phi_h = he_kernel(c, c, 1, rng, 1.0);
  p.gru_z_w = he_kernel(c, 2 * c, 3, rng, 1.0);
  p.gru_z_b = Tensor::zeros({c}, true);
  p.gru_r_w = he_kernel(c, 2 * c, 3, rng, 1.0);
  p.gru_r_b = Tensor::zeros({c}, true);
  p.gru_c_w = he_kernel(c, 2 * c, 3, rng, 1.0);
  p.gru_c_b = Tensor::zeros({c}, true);
  p.readout = ClassHead::init(config.num_classes, c, rng);
  return p;
}

NamedTensors GnnParams::named_parameters() const {
  return {{"gnn.P", P},
          {"gnn.Q", Q},
          {"gnn.phi_f", phi_f},
          {"gnn.phi_g", phi_g},
          {"gnn.phi_h", phi_h},
          {"gnn.gru_z.w", gru_z_w},
          {"gnn.gru_z.b", gru_z_b},
          {"gnn.gru_r.w", gru_r_w},
          {"gnn.gru_r.b", gru_r_b},
          {"gnn.gru_c.w", gru_c_w},
          {"gnn.gru_c.b", gru_c_b},
          {"gnn.head_g.w", readout.weight},
          {"gnn.head_g.b", readout.bias}};
}

EdgeAffinity edge_affinity_lowrank(const Tensor& h_i, const Tensor& h_j, const Tensor& P, const Tensor& Q) {
  if (P.shape() != Q.shape()) throw DimensionError("edge_affinity_lowrank: P and Q differ in shape");
  check_rows(h_i, P.dim(0), "edge_affinity_lowrank");
  check_rows(h_j, Q.dim(0), "edge_affinity_lowrank");
  // Association order (h_i P)(h_j Q)ᵀ keeps the cost at (2WHC² + W²H²C)/d.
  const Tensor left = matmul(h_i, P);
  const Tensor right = matmul(h_j, Q);
  return {matmul(left, transpose(right))};
}

EdgeAffinity edge_affinity_full(const Tensor& h_i, const Tensor& h_j, const Tensor& W) {
  check_rows(h_i, W.dim(0), "edge_affinity_full");
  check_rows(h_j, W.dim(1), "edge_affinity_full");
  return {matmul(matmul(h_i, W), transpose(h_j))};
}

EdgeCosts count_costs(std::uint64_t width, std::uint64_t height, std::uint64_t channels, std::uint64_t reduction) {
  if (width == 0 || height == 0 || channels == 0 || reduction == 0) {
    throw ContractError("count_costs: arguments must be positive");
  }
  if (channels % reduction != 0) throw ContractError("count_costs: d must divide C");
  const std::uint64_t positions = width * height;
  EdgeCosts costs;
  costs.params_full = channels * channels;
  costs.params_lowrank = 2 * channels * channels / reduction;
  costs.mults_full = positions * channels * channels + positions * positions * channels;
  costs.mults_lowrank = (2 * positions * channels * channels + positions * positions * channels) / reduction;
  return costs;
}

SelfEdgeFeature self_edge(const Tensor& h, const GnnParams& params) {
  if (h.rank() != 3) throw DimensionError("self_edge: expected [C×H×W], got " + shape_str(h.shape()));
  const std::size_t c = h.dim(0), positions = h.dim(1) * h.dim(2);
  const Tensor f = conv2d(h, params.phi_f);
  const Tensor g = conv2d(h, params.phi_g);
  const Tensor v = reshape(conv2d(h, params.phi_h), {c, positions});
  const std::size_t inner = f.dim(0);
  const Tensor logits = matmul(transpose(reshape(f, {inner, positions})), reshape(g, {inner, positions}));
  const Tensor attention = row_softmax(logits);
  const Tensor attended = matmul(v, transpose(attention));
  return {add(reshape(attended, h.shape()), h)};
}

Tensor cross_message(const EdgeAffinity& e_ij, const Tensor& h_j_rows) {
  if (e_ij.matrix.rank() != 2 || e_ij.matrix.dim(1) != h_j_rows.dim(0)) {
    throw DimensionError("cross_message: affinity " + shape_str(e_ij.matrix.shape()) + " does not match node rows " +
                         shape_str(h_j_rows.shape()));
  }
  return matmul(row_softmax(e_ij.matrix), h_j_rows);
}

EdgeSet EdgeSet::compute(const GroupGraph& graph, std::span<const Tensor> rows, const GnnParams& params) {
  EdgeSet set;
  const std::size_t k = graph.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b || !graph.linked(a, b)) continue;
      if (graph.node(a).sample_id > graph.node(b).sample_id) continue;
      if (graph.node(a).sample_id == graph.node(b).sample_id && a > b) continue;
      EdgeAffinity forward = edge_affinity_lowrank(rows[a], rows[b], params.P, params.Q);
      EdgeAffinity backward{transpose(forward.matrix)};
      set.edges_.emplace(std::make_pair(a, b), std::move(forward));
      set.edges_.emplace(std::make_pair(b, a), std::move(backward));
    }
  }
  return set;
}

const EdgeAffinity& EdgeSet::get(std::size_t i, std::size_t j) const {
  auto it = edges_.find({i, j});
  if (it == edges_.end()) throw ContractError("no edge between the requested nodes");
  return it->second;
}

Tensor aggregate_messages(const GroupGraph& graph, const EdgeSet& edges, std::span<const SelfEdgeFeature> self_edges,
                          std::span<const Tensor> rows, std::size_t i) {
  const Tensor& self = self_edges[i].feature;
  const std::size_t height = self.dim(1), width = self.dim(2);
  Tensor total;
  for (auto j : graph.neighbours(i)) {
    Tensor message = rows_to_channels(cross_message(edges.get(i, j), rows[j]), height, width);
    total = total.defined() ? add(total, message) : message;
  }
  return total.defined() ? add(total, self) : self;
}

Tensor conv_gru_update(const Tensor& h_prev, const Tensor& message, const GnnParams& params) {
  check_same_shape(h_prev, message, "conv_gru_update");
  const Conv2dOptions same{1, 1, 1};
  const Tensor joint = concat_channels(message, h_prev);
  const Tensor z = sigmoid(conv2d(joint, params.gru_z_w, params.gru_z_b, same));
  const Tensor r = sigmoid(conv2d(joint, params.gru_r_w, params.gru_r_b, same));
  const Tensor candidate = tanh(conv2d(concat_channels(message, mul(r, h_prev)), params.gru_c_w, params.gru_c_b, same));
  return add(mul(one_minus(z), h_prev), mul(z, candidate));
}

DropoutResult graph_dropout_branch(const Tensor& h, double drop_threshold, DropoutBranch branch) {
  require_unit_interval(drop_threshold, "drop threshold");
  if (h.rank() != 3) throw DimensionError("graph_dropout: expected [C×H×W], got " + shape_str(h.shape()));
  if (branch == DropoutBranch::identity) {
    return {h, {Tensor::full({h.dim(1), h.dim(2)}, 1.0), branch}};
  }
  const Tensor o = mean_over_channels(h);
  Tensor s;
  if (branch == DropoutBranch::importance) {
    s = sigmoid(o);
  } else {
    const auto values = o.data();
    const double cutoff = *std::max_element(values.begin(), values.end()) * drop_threshold;
    std::vector<double> keep(values.size());
    for (std::size_t p = 0; p < values.size(); ++p) keep[p] = values[p] < cutoff ? 1.0 : 0.0;
    s = mul(o, Tensor(o.shape(), std::move(keep)));
  }
  return {spatial_mul(h, s), {s, branch}};
}

DropoutResult graph_dropout(const Tensor& h, double drop_rate, double drop_threshold, Rng& rng, DropoutMode mode) {
  require_unit_interval(drop_rate, "drop rate");
  require_unit_interval(drop_threshold, "drop threshold");
  DropoutBranch branch = DropoutBranch::importance;
  if (mode == DropoutMode::disabled) {
    branch = DropoutBranch::identity;
  } else if (mode == DropoutMode::train) {
    branch = rng.uniform() < drop_rate ? DropoutBranch::importance : DropoutBranch::drop;
  }
  return graph_dropout_branch(h, drop_threshold, branch);
}

HeadOutput graph_readout(const Tensor& h_final, const ClassHead& head) { return apply_head(h_final, head); }

double dropout_draw(std::uint64_t seed, std::int64_t sample_id, std::size_t step) {
  Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(sample_id)), step));
  return rng.uniform();
}

GnnOutput run_gnn(const GroupGraph& graph, const GnnParams& params, const GnnRunOptions& options) {
  if (options.steps == 0) throw ContractError("run_gnn: T must be at least 1");
  require_unit_interval(options.drop_rate, "drop rate");
  require_unit_interval(options.drop_threshold, "drop threshold");
  const std::size_t k = graph.size();
  std::vector<Tensor> states;
  for (const auto& node : graph.nodes()) states.push_back(node.state);

  GnnOutput out;
  out.branches.assign(k, {});
  for (std::size_t t = 1; t <= options.steps; ++t) {
    std::vector<Tensor> rows;
    std::vector<SelfEdgeFeature> self_edges;
    for (const auto& h : states) {
      rows.push_back(channels_to_rows(h));
      self_edges.push_back(self_edge(h, params));
    }
    const EdgeSet edges = EdgeSet::compute(graph, rows, params);
    std::vector<Tensor> next(k);
    for (std::size_t i = 0; i < k; ++i) {
      const Tensor message = aggregate_messages(graph, edges, self_edges, rows, i);
      const Tensor updated = conv_gru_update(states[i], message, params);
      DropoutBranch branch = DropoutBranch::importance;
      if (options.mode == DropoutMode::disabled) {
        branch = DropoutBranch::identity;
      } else if (options.mode == DropoutMode::train) {
        const double r = dropout_draw(options.seed, graph.node(i).sample_id, t);
        branch = r < options.drop_rate ? DropoutBranch::importance : DropoutBranch::drop;
      }
      next[i] = graph_dropout_branch(updated, options.drop_threshold, branch).features;
      out.branches[i].push_back(branch);
    }
    states = std::move(next);
  }
  for (std::size_t i = 0; i < k; ++i) out.readouts.push_back(graph_readout(states[i], params.readout));
  out.final_states = std::move(states);
  return out;
}

}  // namespace gwsm
