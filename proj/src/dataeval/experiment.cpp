#include "dataeval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <exception>
#include <sstream>
#include <thread>

#include "numcore/errors.hpp"
#include "training/trainer.hpp"

namespace gwsm {

namespace {

constexpr CamSource kSources[] = {CamSource::intermediate, CamSource::graph, CamSource::ensemble};

std::string trim_copy(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::string aspect_of(const Variant& v) {
  if (v.name == "default") return "full model";
  if (v.name == "no-dropout") return "graph dropout";
  for (const auto& [key, value] : v.overrides) {
    if (key == "K") return "node number";
    if (key == "T") return "message passing";
    if (key == "delta_r" || key == "delta_d" || key == "graph_dropout") return "graph dropout";
  }
  return "custom";
}

}  // namespace

std::vector<PseudoLabel> pseudo_labels(const std::vector<CamStack>& cams, const Dataset& dataset, CamSource source,
                                       double theta_fg, double theta_bg) {
  if (cams.size() != dataset.size()) throw DimensionError("pseudo_labels: one CAM stack per sample expected");
  std::vector<PseudoLabel> out;
  out.reserve(cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    out.push_back(make_pseudo_label(cams[i].get(source), dataset[i].label, theta_fg, theta_bg, dataset[i].height,
                                    dataset[i].width, source));
  }
  return out;
}

EvalReport score_pseudo_labels(const std::vector<PseudoLabel>& labels, const Dataset& dataset, std::size_t num_classes) {
  MiouAccumulator acc(num_classes, kIgnoreLabel);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (dataset[i].gt_mask.empty()) throw DataError("sample " + std::to_string(dataset[i].id) + " has no ground-truth mask");
    acc.add(labels[i].mask, dataset[i].gt_mask);
  }
  return acc.report();
}

std::vector<SweepPoint> threshold_sweep(const std::vector<CamStack>& cams, const Dataset& dataset, CamSource source,
                                        std::span<const double> fg_values, std::span<const double> bg_values,
                                        std::size_t num_classes) {
  std::size_t total_pixels = 0;
  for (const auto& s : dataset) total_pixels += s.height * s.width;
  std::vector<SweepPoint> out;
  for (double fg : fg_values) {
    for (double bg : bg_values) {
      if (!(bg < fg)) continue;
      const auto report = score_pseudo_labels(pseudo_labels(cams, dataset, source, fg, bg), dataset, num_classes);
      const double ignored =
          total_pixels ? 1.0 - static_cast<double>(report.scored_pixels) / static_cast<double>(total_pixels) : 0.0;
      out.push_back({fg, bg, report.miou, ignored});
    }
  }
  return out;
}

std::string format_sweep(std::span<const SweepPoint> points) {
  std::ostringstream os;
  char buf[128];
  os << "theta_fg  theta_bg  mIoU     ignored\n";
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%8.3f  %8.3f  %.4f  %.4f\n", p.theta_fg, p.theta_bg, p.miou, p.ignored_fraction);
    os << buf;
  }
  return os.str();
}

const EvalReport& SourceScores::get(CamSource source) const {
  switch (source) {
    case CamSource::intermediate: return intermediate;
    case CamSource::graph: return graph;
    case CamSource::ensemble: return ensemble;
  }
  return ensemble;
}

SourceScores evaluate_model(const Model& model, const Dataset& eval_set, std::uint64_t seed) {
  const auto cams = compute_cams(model, eval_set, seed);
  const auto& c = model.config;
  SourceScores scores;
  scores.intermediate = score_pseudo_labels(pseudo_labels(cams, eval_set, CamSource::intermediate, c.theta_fg, c.theta_bg),
                                            eval_set, c.num_classes);
  scores.graph =
      score_pseudo_labels(pseudo_labels(cams, eval_set, CamSource::graph, c.theta_fg, c.theta_bg), eval_set, c.num_classes);
  scores.ensemble = score_pseudo_labels(pseudo_labels(cams, eval_set, CamSource::ensemble, c.theta_fg, c.theta_bg),
                                        eval_set, c.num_classes);
  return scores;
}

TrainConfig Variant::apply(TrainConfig base) const {
  for (const auto& [key, value] : overrides) base.set(key, value);
  base.validate();
  return base;
}

Variant parse_variant(std::string_view text) {
  Variant v;
  v.name = trim_copy(text);
  if (v.name.empty()) throw ContractError("empty variant");
  if (v.name == "default") return v;
  if (v.name == "no-dropout") {
    v.overrides.emplace_back("graph_dropout", "false");
    return v;
  }
  std::string_view rest = v.name;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ContractError("variant item '" + std::string(item) + "' is not key=value");
    v.overrides.emplace_back(trim_copy(item.substr(0, eq)), trim_copy(item.substr(eq + 1)));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  TrainConfig probe;
  for (const auto& [key, value] : v.overrides) probe.set(key, value);
  return v;
}

std::vector<Variant> parse_variants(std::string_view list) {
  std::vector<Variant> out;
  while (!list.empty()) {
    const auto sep = list.find(';');
    const auto item = trim_copy(list.substr(0, sep));
    if (!item.empty()) out.push_back(parse_variant(item));
    list = sep == std::string_view::npos ? std::string_view{} : list.substr(sep + 1);
  }
  if (out.empty()) throw ContractError("no variants given");
  return out;
}

std::vector<Variant> diagnostic_variants() {
  return parse_variants(
      "default;K=3;K=5;K=6;T=2;T=4;T=5;delta_r=0.8,delta_d=0.9;delta_r=0.8,delta_d=0.5;"
      "delta_r=0.6,delta_d=0.7;delta_r=0.4,delta_d=0.7;no-dropout");
}

double AblationTable::value(const std::string& variant, std::uint64_t seed, CamSource source) const {
  for (const auto& c : cells) {
    if (c.variant == variant && c.seed == seed && c.source == source) return c.miou;
  }
  throw ContractError("no ablation result for " + variant);
}

double AblationTable::mean(const std::string& variant, CamSource source) const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& c : cells) {
    if (c.variant == variant && c.source == source) {
      total += c.miou;
      ++n;
    }
  }
  if (n == 0) throw ContractError("no ablation result for " + variant);
  return total / static_cast<double>(n);
}

std::string AblationTable::to_text() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-16s  %-28s  %9s", "aspect", "variant", "mIoU(%)");
  os << buf;
  for (auto s : seeds) {
    std::snprintf(buf, sizeof(buf), "  %9s", ("seed " + std::to_string(s)).c_str());
    os << buf;
  }
  os << '\n';
  auto row = [&](const std::string& aspect, const std::string& label, const std::string& variant, CamSource source) {
    std::snprintf(buf, sizeof(buf), "%-16s  %-28s  %9.2f", aspect.c_str(), label.c_str(), 100.0 * mean(variant, source));
    os << buf;
    for (auto s : seeds) {
      std::snprintf(buf, sizeof(buf), "  %9.2f", 100.0 * value(variant, s, source));
      os << buf;
    }
    os << '\n';
  };
  for (const auto& name : variants) row(aspect_of(parse_variant(name)), name, name, CamSource::ensemble);
  if (!variants.empty()) {
    const std::string& base = variants.front();
    row("self-ensembling", "intermediate output", base, CamSource::intermediate);
    row("self-ensembling", "graph output", base, CamSource::graph);
    row("self-ensembling", "self-ensembling", base, CamSource::ensemble);
  }
  return os.str();
}

std::string AblationTable::to_csv() const {
  std::ostringstream os;
  os << "variant,seed,source,miou\n";
  for (const auto& c : cells) {
    std::string name = c.variant;
    if (name.find(',') != std::string::npos) name = "\"" + name + "\"";
    os << name << ',' << c.seed << ',' << to_string(c.source) << ',' << format_double(c.miou) << '\n';
  }
  return os.str();
}

AblationTable ablation_harness(const Dataset& train_set, const Dataset& eval_set, const TrainConfig& base,
                               std::span<const Variant> variants, const AblationOptions& options) {
  if (options.seeds.empty()) throw ContractError("ablation needs at least one seed");
  struct Job {
    const Variant* variant;
    std::uint64_t seed;
    SourceScores scores;
    std::exception_ptr error;
  };
  std::vector<Job> jobs;
  for (const auto& v : variants)
    for (auto s : options.seeds) jobs.push_back({&v, s, {}, nullptr});

  std::mutex progress_mutex;
  auto run = [&](Job& job) {
    try {
      TrainConfig config = job.variant->apply(base);
      config.seed = job.seed;
      const TrainResult trained = train(train_set, config);
      job.scores = evaluate_model(trained.model, eval_set, job.seed);
      if (options.progress) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "variant=%s seed=%llu miou_m=%.4f miou_g=%.4f miou_ens=%.4f final_loss=%.4f",
                      job.variant->name.c_str(), static_cast<unsigned long long>(job.seed),
                      job.scores.intermediate.miou, job.scores.graph.miou, job.scores.ensemble.miou,
                      trained.log.epochs.empty() ? 0.0 : trained.log.epochs.back().loss);
        const std::lock_guard<std::mutex> lock(progress_mutex);
        options.progress(buf);
      }
    } catch (...) {
      job.error = std::current_exception();
    }
  };

  if (options.parallel) {
    // Fixed-size pool pulling jobs in order.
    const std::size_t workers = std::min<std::size_t>(std::max(2u, std::thread::hardware_concurrency()), jobs.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run(jobs[i]);
      });
    }
    for (auto& t : threads) t.join();
  } else {
    for (auto& job : jobs) run(job);
  }

  AblationTable table;
  table.seeds = options.seeds;
  for (const auto& v : variants) table.variants.push_back(v.name);
  for (const auto& job : jobs) {
    if (job.error) std::rethrow_exception(job.error);
    for (auto source : kSources) table.cells.push_back({job.variant->name, job.seed, source, job.scores.get(source).miou});
  }
  return table;
}

}  // namespace gwsm
