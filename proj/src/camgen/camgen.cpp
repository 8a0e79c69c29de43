#include "camgen/camgen.hpp"

#include <algorithm>

#include "numcore/errors.hpp"

namespace gwsm {

std::string to_string(CamSource source) {
  switch (source) {
    case CamSource::intermediate: return "intermediate";
    case CamSource::graph: return "graph";
    case CamSource::ensemble: return "ensemble";
  }
  return "ensemble";
}

CamSource parse_cam_source(const std::string& text) {
  if (text == "intermediate" || text == "m") return CamSource::intermediate;
  if (text == "graph" || text == "g") return CamSource::graph;
  if (text == "ensemble" || text == "ens") return CamSource::ensemble;
  throw ContractError("unknown CAM source '" + text + "' (intermediate, graph, ensemble)");
}

const Tensor& CamStack::get(CamSource source) const {
  switch (source) {
    case CamSource::intermediate: return cams_m;
    case CamSource::graph: return cams_g;
    case CamSource::ensemble: return cams_ens;
  }
  return cams_ens;
}

Tensor extract_cam(const Tensor& class_map, const Label& label) {
  if (class_map.rank() != 3 || class_map.dim(0) != label.size()) {
    throw DimensionError("extract_cam: class map " + shape_str(class_map.shape()) + " vs " +
                         std::to_string(label.size()) + " classes");
  }
  const std::size_t plane = class_map.dim(1) * class_map.dim(2);
  std::vector<double> out(class_map.numel(), 0.0);
  const auto in = class_map.data();
  for (std::size_t c = 0; c < label.size(); ++c) {
    if (!label[c]) continue;
    double peak = 0.0;
    for (std::size_t p = 0; p < plane; ++p) peak = std::max(peak, in[c * plane + p]);
    if (peak <= 0.0) continue;
    for (std::size_t p = 0; p < plane; ++p) out[c * plane + p] = std::max(0.0, in[c * plane + p]) / peak;
  }
  return Tensor(class_map.shape(), std::move(out));
}

Tensor ensemble(const Tensor& cams_m, const Tensor& cams_g) {
  check_same_shape(cams_m, cams_g, "ensemble");
  std::vector<double> out(cams_m.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (cams_m[i] + cams_g[i]);
  return Tensor(cams_m.shape(), std::move(out));
}

PseudoLabel make_pseudo_label(const Tensor& cams, const Label& label, double theta_fg, double theta_bg,
                              std::size_t out_height, std::size_t out_width, CamSource provenance) {
  if (!(0.0 <= theta_bg && theta_bg < theta_fg && theta_fg <= 1.0)) {
    throw ContractError("make_pseudo_label: need 0 <= theta_bg < theta_fg <= 1");
  }
  if (cams.rank() != 3 || cams.dim(0) != label.size()) throw DimensionError("make_pseudo_label: cams/label mismatch");
  const std::size_t h = cams.dim(1), w = cams.dim(2), plane = h * w;
  if (out_height == 0 || out_width == 0) throw DimensionError("make_pseudo_label: empty output size");

  std::vector<std::uint8_t> grid(plane);
  for (std::size_t p = 0; p < plane; ++p) {
    double best = 0.0;
    std::size_t best_class = 0;
    bool any = false;
    for (std::size_t c = 0; c < label.size(); ++c) {
      if (!label[c]) continue;
      const double v = cams[c * plane + p];
      if (!any || v > best) {
        best = v;
        best_class = c;
        any = true;
      }
    }
    if (any && best >= theta_fg) grid[p] = static_cast<std::uint8_t>(best_class + 1);
    else if (best < theta_bg) grid[p] = 0;
    else grid[p] = kIgnoreLabel;
  }

  PseudoLabel out;
  out.height = out_height;
  out.width = out_width;
  out.provenance = provenance;
  out.mask.resize(out_height * out_width);
  for (std::size_t y = 0; y < out_height; ++y) {
    const std::size_t sy = y * h / out_height;
    for (std::size_t x = 0; x < out_width; ++x) {
      const std::size_t sx = x * w / out_width;
      out.mask[y * out_width + x] = grid[sy * w + sx];
    }
  }
  return out;
}

std::vector<CamStack> compute_cams(const Model& model, const Dataset& dataset, std::uint64_t seed) {
  TapeScope paused(nullptr);
  Rng rng(mix_seed(seed, 0xca3));
  const auto groups = covering_groups(dataset, model.config.K, rng);
  std::vector<CamStack> stacks(dataset.size());
  for (const auto& indices : groups) {
    std::vector<const ImageSample*> group;
    for (auto idx : indices) group.push_back(&dataset[idx]);
    const GroupForward fwd = forward_group(model, group, run_options(model.config, DropoutMode::eval, seed));
    for (std::size_t n = 0; n < indices.size(); ++n) {
      const ImageSample& s = dataset[indices[n]];
      CamStack& stack = stacks[indices[n]];
      stack.sample_id = s.id;
      stack.present_classes = s.label;
      stack.cams_m = extract_cam(fwd.intermediate[n].class_map, s.label);
      stack.cams_g = extract_cam(fwd.graph.readouts[n].class_map, s.label);
      stack.cams_ens = ensemble(stack.cams_m, stack.cams_g);
    }
  }
  return stacks;
}

}  // namespace gwsm
