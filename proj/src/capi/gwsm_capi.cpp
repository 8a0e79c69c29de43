#include "gwsm/gwsm.h"

#include <chrono>
#include <cmath>
#include <exception>
#include <new>
#include <string>

#include "cli/checkpoint.hpp"
#include "dataeval/dataset_io.hpp"
#include "dataeval/experiment.hpp"
#include "dataeval/exports.hpp"
#include "dataeval/shapes.hpp"
#include "numcore/errors.hpp"
#include "numcore/ops.hpp"
#include "training/trainer.hpp"

struct gwsm_config {
  gwsm::TrainConfig value;
};
struct gwsm_dataset {
  gwsm::Dataset value;
};
struct gwsm_model {
  gwsm::Model value;
};
struct gwsm_text {
  std::string value;
};

namespace {

thread_local std::string g_last_error;

gwsm_status fail(gwsm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the core's exception families onto status codes.
template <typename F>
gwsm_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return GWSM_OK;
  } catch (const gwsm::DataError& e) {
    return fail(GWSM_ERR_DATA, e.what());
  } catch (const gwsm::NumericError& e) {
    return fail(GWSM_ERR_NUMERIC, e.what());
  } catch (const gwsm::ContractError& e) {
    return fail(GWSM_ERR_USAGE, e.what());
  } catch (const gwsm::DimensionError& e) {
    return fail(GWSM_ERR_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GWSM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GWSM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GWSM_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw gwsm::ContractError(std::string(what) + " must not be null");
}

gwsm::CamSource to_source(gwsm_cam_source s) {
  switch (s) {
    case GWSM_CAM_INTERMEDIATE: return gwsm::CamSource::intermediate;
    case GWSM_CAM_GRAPH: return gwsm::CamSource::graph;
    case GWSM_CAM_ENSEMBLE: return gwsm::CamSource::ensemble;
  }
  throw gwsm::ContractError("unknown CAM source " + std::to_string(static_cast<int>(s)));
}

gwsm_text* make_text(std::string s) { return new gwsm_text{std::move(s)}; }

}  // namespace

extern "C" {

const char* gwsm_last_error(void) { return g_last_error.c_str(); }
const char* gwsm_version(void) { return "1.0.0"; }

const char* gwsm_text_data(const gwsm_text* text) { return text ? text->value.c_str() : ""; }
size_t gwsm_text_size(const gwsm_text* text) { return text ? text->value.size() : 0; }
void gwsm_text_free(gwsm_text* text) { delete text; }

gwsm_status gwsm_config_new(gwsm_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new gwsm_config{};
  });
}

gwsm_status gwsm_config_parse(const char* text, gwsm_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new gwsm_config{gwsm::TrainConfig::from_text(text)};
  });
}

gwsm_status gwsm_config_load(const char* path, gwsm_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gwsm_config{gwsm::load_config_file(path)};
  });
}

gwsm_status gwsm_config_set(gwsm_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    gwsm::TrainConfig updated = config->value;
    try {
      updated.set(key, value);
    } catch (const gwsm::DataError& e) {
      throw gwsm::ContractError(e.what());
    }
    updated.validate();
    config->value = updated;
  });
}

gwsm_status gwsm_config_get(const gwsm_config* config, const char* key, gwsm_text** out) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(out, "out");
    const std::string text = config->value.to_text();
    const std::string prefix = std::string(key) + " = ";
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto end = text.find('\n', pos);
      const std::string line = text.substr(pos, end - pos);
      if (line.rfind(prefix, 0) == 0) {
        *out = make_text(line.substr(prefix.size()));
        return;
      }
      if (end == std::string::npos) break;
      pos = end + 1;
    }
    throw gwsm::ContractError("unknown config key '" + std::string(key) + "'");
  });
}

gwsm_status gwsm_config_to_text(const gwsm_config* config, gwsm_text** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_text(config->value.to_text());
  });
}

void gwsm_config_free(gwsm_config* config) { delete config; }

void gwsm_shapes_options_default(gwsm_shapes_options* options) {
  if (!options) return;
  const gwsm::ShapesConfig d;
  options->size = d.size;
  options->seed = d.seed;
  options->canvas = d.canvas;
  options->first_id = d.first_id;
  options->min_objects = d.min_objects;
  options->max_objects = d.max_objects;
  options->min_radius = d.min_radius;
  options->max_radius = d.max_radius;
}

gwsm_status gwsm_dataset_generate(const gwsm_shapes_options* options, gwsm_dataset** out) {
  return guarded([&] {
    require(options, "options");
    require(out, "out");
    gwsm::ShapesConfig c;
    c.size = options->size;
    c.seed = options->seed;
    c.canvas = options->canvas;
    c.first_id = options->first_id;
    c.min_objects = options->min_objects;
    c.max_objects = options->max_objects;
    c.min_radius = options->min_radius;
    c.max_radius = options->max_radius;
    *out = new gwsm_dataset{gwsm::generate_dataset(c)};
  });
}

gwsm_status gwsm_dataset_load(const char* dir, gwsm_dataset** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new gwsm_dataset{gwsm::load_dataset(dir)};
  });
}

gwsm_status gwsm_dataset_save(const gwsm_dataset* dataset, const char* dir) {
  return guarded([&] {
    require(dataset, "dataset");
    require(dir, "dir");
    gwsm::save_dataset(dir, dataset->value);
  });
}

size_t gwsm_dataset_size(const gwsm_dataset* dataset) { return dataset ? dataset->value.size() : 0; }
void gwsm_dataset_free(gwsm_dataset* dataset) { delete dataset; }

gwsm_status gwsm_train(const gwsm_dataset* dataset, const gwsm_config* config, gwsm_line_fn on_line, void* user,
                       gwsm_model** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(config, "config");
    require(out, "out");
    gwsm::BatchCallback cb;
    if (on_line) cb = [&](const gwsm::BatchRecord& r) { on_line(gwsm::format_record(r).c_str(), user); };
    auto result = gwsm::train(dataset->value, config->value, cb);
    *out = new gwsm_model{std::move(result.model)};
  });
}

gwsm_status gwsm_model_save(const gwsm_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    gwsm::save_checkpoint(path, model->value);
  });
}

gwsm_status gwsm_model_load(const char* path, gwsm_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gwsm_model{gwsm::load_checkpoint(path)};
  });
}

gwsm_status gwsm_model_config(const gwsm_model* model, gwsm_config** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = new gwsm_config{model->value.config};
  });
}

void gwsm_model_free(gwsm_model* model) { delete model; }

gwsm_status gwsm_export_cams(const gwsm_model* model, const gwsm_dataset* dataset, gwsm_cam_source source,
                             uint64_t seed, const char* out_dir, size_t* files_written) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out_dir, "out_dir");
    const auto src = to_source(source);
    const auto cams = gwsm::compute_cams(model->value, dataset->value, seed);
    const auto n = gwsm::export_cams(cams, dataset->value, src, out_dir);
    if (files_written) *files_written = n;
  });
}

gwsm_status gwsm_export_pseudo_labels(const gwsm_model* model, const gwsm_dataset* dataset, gwsm_cam_source source,
                                      double theta_fg, double theta_bg, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out_dir, "out_dir");
    const auto src = to_source(source);
    const double fg = theta_fg < 0.0 ? model->value.config.theta_fg : theta_fg;
    const double bg = theta_bg < 0.0 ? model->value.config.theta_bg : theta_bg;
    const auto cams = gwsm::compute_cams(model->value, dataset->value, seed);
    gwsm::export_pseudo_labels(gwsm::pseudo_labels(cams, dataset->value, src, fg, bg), dataset->value, out_dir);
  });
}

gwsm_status gwsm_eval_dir(const gwsm_dataset* dataset, const char* pred_dir, double* miou, gwsm_text** report) {
  return guarded([&] {
    require(dataset, "dataset");
    require(pred_dir, "pred_dir");
    const auto r = gwsm::evaluate_prediction_dir(dataset->value, pred_dir, gwsm::kShapeClasses);
    if (miou) *miou = r.miou;
    if (report) *report = make_text(r.to_text());
  });
}

gwsm_status gwsm_eval_model(const gwsm_model* model, const gwsm_dataset* dataset, uint64_t seed, double miou[3],
                            gwsm_text** report) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    const auto scores = gwsm::evaluate_model(model->value, dataset->value, seed);
    if (miou) {
      miou[0] = scores.intermediate.miou;
      miou[1] = scores.graph.miou;
      miou[2] = scores.ensemble.miou;
    }
    if (report) {
      std::string text;
      for (auto src : {gwsm::CamSource::intermediate, gwsm::CamSource::graph, gwsm::CamSource::ensemble}) {
        text += "== " + gwsm::to_string(src) + "\n" + scores.get(src).to_text();
      }
      *report = make_text(std::move(text));
    }
  });
}

gwsm_status gwsm_threshold_sweep(const gwsm_model* model, const gwsm_dataset* dataset, gwsm_cam_source source,
                                 uint64_t seed, gwsm_text** out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out, "out");
    const auto src = to_source(source);
    const auto cams = gwsm::compute_cams(model->value, dataset->value, seed);
    const double fg[] = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    const double bg[] = {0.05, 0.1, 0.2, 0.3};
    const auto points = gwsm::threshold_sweep(cams, dataset->value, src, fg, bg, model->value.config.num_classes);
    *out = make_text(gwsm::format_sweep(points));
  });
}

gwsm_status gwsm_ablate(const gwsm_dataset* train_set, const gwsm_dataset* eval_set, const gwsm_config* base,
                        const char* variants, const uint64_t* seeds, size_t seed_count, int parallel,
                        gwsm_line_fn on_line, void* user, gwsm_text** table, gwsm_text** csv) {
  return guarded([&] {
    require(train_set, "train_set");
    require(eval_set, "eval_set");
    require(base, "base");
    require(variants, "variants");
    if (seed_count > 0) require(seeds, "seeds");
    const std::string spec = variants;
    const auto list = spec == "table" ? gwsm::diagnostic_variants() : gwsm::parse_variants(spec);
    gwsm::AblationOptions options;
    if (seed_count > 0) options.seeds.assign(seeds, seeds + seed_count);
    options.parallel = parallel != 0;
    if (on_line) options.progress = [&](const std::string& line) { on_line(line.c_str(), user); };
    const auto result = gwsm::ablation_harness(train_set->value, eval_set->value, base->value, list, options);
    if (table) *table = make_text(result.to_text());
    if (csv) *csv = make_text(result.to_csv());
  });
}

gwsm_status gwsm_bench_edge(size_t width, size_t height, size_t channels, size_t reduction, uint64_t seed,
                            size_t repeats, gwsm_edge_bench* out) {
  return guarded([&] {
    require(out, "out");
    if (repeats == 0) throw gwsm::ContractError("repeats must be at least 1");
    const auto costs = gwsm::count_costs(width, height, channels, reduction);
    gwsm::Rng rng(seed);
    gwsm::TapeScope paused(nullptr);
    const gwsm::Shape feat{width * height, channels};
    const auto hi = gwsm::Tensor::randn(feat, rng, 1.0);
    const auto hj = gwsm::Tensor::randn(feat, rng, 1.0);
    const double sd = 1.0 / std::sqrt(static_cast<double>(channels));
    const auto P = gwsm::Tensor::randn({channels, channels / reduction}, rng, sd);
    const auto Q = gwsm::Tensor::randn({channels, channels / reduction}, rng, sd);
    const auto W = gwsm::matmul(P, gwsm::transpose(Q));

    using clock = std::chrono::steady_clock;
    gwsm::EdgeAffinity full, low;
    std::uint64_t counted_full = 0, counted_low = 0;
    double t_full = 0.0, t_low = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      gwsm::MultiplicationCount count_full;
      auto t0 = clock::now();
      full = gwsm::edge_affinity_full(hi, hj, W);
      auto t1 = clock::now();
      counted_full = count_full.elapsed();
      gwsm::MultiplicationCount count_low;
      auto t2 = clock::now();
      low = gwsm::edge_affinity_lowrank(hi, hj, P, Q);
      auto t3 = clock::now();
      counted_low = count_low.elapsed();
      t_full += std::chrono::duration<double>(t1 - t0).count();
      t_low += std::chrono::duration<double>(t3 - t2).count();
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < full.matrix.numel(); ++i) {
      diff = std::max(diff, std::abs(full.matrix[i] - low.matrix[i]));
    }
    out->params_full = costs.params_full;
    out->params_lowrank = costs.params_lowrank;
    out->mults_full = costs.mults_full;
    out->mults_lowrank = costs.mults_lowrank;
    out->counted_mults_full = counted_full;
    out->counted_mults_lowrank = counted_low;
    out->seconds_full = t_full / static_cast<double>(repeats);
    out->seconds_lowrank = t_low / static_cast<double>(repeats);
    out->max_abs_diff = diff;
  });
}

}  // extern "C"
