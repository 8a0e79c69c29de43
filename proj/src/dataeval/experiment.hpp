#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "camgen/camgen.hpp"
#include "dataeval/miou.hpp"

namespace gwsm {

std::vector<PseudoLabel> pseudo_labels(const std::vector<CamStack>& cams, const Dataset& dataset, CamSource source,
                                       double theta_fg, double theta_bg);

EvalReport score_pseudo_labels(const std::vector<PseudoLabel>& labels, const Dataset& dataset, std::size_t num_classes);

struct SweepPoint {
  double theta_fg = 0.0, theta_bg = 0.0, miou = 0.0;
  double ignored_fraction = 0.0;
};

// mIoU for every valid (θ_fg, θ_bg) pair of the two grids (θ_bg < θ_fg).
std::vector<SweepPoint> threshold_sweep(const std::vector<CamStack>& cams, const Dataset& dataset, CamSource source,
                                        std::span<const double> fg_values, std::span<const double> bg_values,
                                        std::size_t num_classes);
std::string format_sweep(std::span<const SweepPoint> points);

struct SourceScores {
  EvalReport intermediate, graph, ensemble;
  const EvalReport& get(CamSource source) const;
};

// CAMs in eval mode, thresholded with the model's θ_fg/θ_bg, scored against gt masks.
SourceScores evaluate_model(const Model& model, const Dataset& eval_set, std::uint64_t seed);

struct Variant {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;

  TrainConfig apply(TrainConfig base) const;
};

// "default", "no-dropout", or comma-separated key=value overrides such as
// "delta_r=0.6,delta_d=0.7".
Variant parse_variant(std::string_view text);
std::vector<Variant> parse_variants(std::string_view comma_or_semicolon_list);

// The rows of the diagnostic table: default, node count, steps, dropout grid, w/o dropout.
std::vector<Variant> diagnostic_variants();

struct AblationCell {
  std::string variant;
  std::uint64_t seed = 0;
  CamSource source = CamSource::ensemble;
  double miou = 0.0;
};

struct AblationTable {
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationCell> cells;

  double value(const std::string& variant, std::uint64_t seed, CamSource source) const;
  double mean(const std::string& variant, CamSource source) const;
  // Aligned plain-text table: one ensemble-score row per variant, then the
  // three CAM sources of the first variant.
  std::string to_text() const;
  std::string to_csv() const;
};

struct AblationOptions {
  std::vector<std::uint64_t> seeds{1};
  bool parallel = false;
  std::function<void(const std::string&)> progress;
};

// Trains every (variant, seed) pair with base overrides applied and scores
// all three CAM sources of each trained model on eval_set.
AblationTable ablation_harness(const Dataset& train_set, const Dataset& eval_set, const TrainConfig& base,
                               std::span<const Variant> variants, const AblationOptions& options);

}  // namespace gwsm
