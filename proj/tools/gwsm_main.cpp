#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gwsm/gwsm.h"

namespace {

// Owning wrappers around the C handles.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  operator T*() const { return p; }
};
using Config = Handle<gwsm_config, gwsm_config_free>;
using Dataset = Handle<gwsm_dataset, gwsm_dataset_free>;
using Model = Handle<gwsm_model, gwsm_model_free>;
using Text = Handle<gwsm_text, gwsm_text_free>;

struct Failure {
  int code;
};

void check(gwsm_status status) {
  if (status == GWSM_OK) return;
  std::cerr << "error: " << gwsm_last_error() << "\n";
  throw Failure{static_cast<int>(status)};
}

gwsm_cam_source parse_source(const std::string& s) {
  if (s == "intermediate" || s == "m") return GWSM_CAM_INTERMEDIATE;
  if (s == "graph" || s == "g") return GWSM_CAM_GRAPH;
  if (s == "ensemble" || s == "ens") return GWSM_CAM_ENSEMBLE;
  std::cerr << "error: unknown CAM source '" << s << "' (intermediate, graph, ensemble)\n";
  throw Failure{GWSM_ERR_USAGE};
}

void load_config(Config& config, const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) check(gwsm_config_new(config.out()));
  else check(gwsm_config_load(path.c_str(), config.out()));
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << item << "'\n";
      throw Failure{GWSM_ERR_USAGE};
    }
    check(gwsm_config_set(config, item.substr(0, eq).c_str(), item.substr(eq + 1).c_str()));
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    throw Failure{GWSM_ERR_DATA};
  }
}

struct LineSink {
  std::ofstream* file = nullptr;
  bool echo = true;
  static void call(const char* line, void* user) {
    auto* self = static_cast<LineSink*>(user);
    if (self->file) *self->file << line << '\n';
    if (self->echo) std::cout << line << '\n' << std::flush;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-wise semantic mining for weakly supervised segmentation on synthetic shapes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gwsm_version());

  // gen-data
  std::string gen_out;
  gwsm_shapes_options shapes;
  gwsm_shapes_options_default(&shapes);
  long long gen_size = static_cast<long long>(shapes.size);
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic shapes dataset");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--size", gen_size, "Number of images (>= 1)")->capture_default_str();
  gen->add_option("--seed", shapes.seed, "Generator seed")->capture_default_str();
  gen->add_option("--canvas", shapes.canvas, "Image side in pixels (multiple of 4)")->capture_default_str();
  gen->add_option("--first-id", shapes.first_id, "Id of the first sample")->capture_default_str();
  gen->add_option("--min-radius", shapes.min_radius, "Smallest object radius, fraction of the side")
      ->capture_default_str();
  gen->add_option("--max-radius", shapes.max_radius, "Largest object radius, fraction of the side")
      ->capture_default_str();

  // train
  std::string train_data, train_config, train_out, train_log;
  std::vector<std::string> train_set;
  bool train_quiet = false;
  auto* train = app.add_subcommand("train", "Train the classification network and write a checkpoint");
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "Config file (key = value lines)");
  train->add_option("--set", train_set, "Override one config key (key=value), repeatable");
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--log", train_log, "Training log path (default: <out>.log)");
  train->add_flag("--quiet", train_quiet, "Do not echo per-batch records");

  // cam / pseudo
  std::string cam_model, cam_data, cam_out, cam_source = "ensemble";
  std::uint64_t cam_seed = 0;
  auto* cam = app.add_subcommand("cam", "Export per-class CAM heatmaps and overlays");
  cam->add_option("--model", cam_model, "Checkpoint")->required();
  cam->add_option("--data", cam_data, "Dataset directory")->required();
  cam->add_option("--out", cam_out, "Output directory")->required();
  cam->add_option("--source", cam_source, "intermediate, graph or ensemble")->capture_default_str();
  cam->add_option("--seed", cam_seed, "Grouping seed")->capture_default_str();

  std::string ps_model, ps_data, ps_out, ps_source = "ensemble";
  double ps_fg = -1.0, ps_bg = -1.0;
  std::uint64_t ps_seed = 0;
  auto* pseudo = app.add_subcommand("pseudo", "Write pseudo-label masks (255 = ignore)");
  pseudo->add_option("--model", ps_model, "Checkpoint")->required();
  pseudo->add_option("--data", ps_data, "Dataset directory")->required();
  pseudo->add_option("--out", ps_out, "Output directory")->required();
  pseudo->add_option("--source", ps_source, "intermediate, graph or ensemble")->capture_default_str();
  pseudo->add_option("--theta-fg", ps_fg, "Foreground threshold (default: from the checkpoint)");
  pseudo->add_option("--theta-bg", ps_bg, "Background threshold (default: from the checkpoint)");
  pseudo->add_option("--seed", ps_seed, "Grouping seed")->capture_default_str();

  // eval
  std::string ev_data, ev_pred, ev_model;
  std::uint64_t ev_seed = 0;
  auto* eval = app.add_subcommand("eval", "Score masks in --pred, or a checkpoint's pseudo-labels, against ground truth");
  eval->add_option("--data", ev_data, "Dataset directory with masks")->required();
  auto* ev_pred_opt = eval->add_option("--pred", ev_pred, "Directory of <stem>.pgm predictions");
  auto* ev_model_opt = eval->add_option("--model", ev_model, "Checkpoint; scores all three CAM sources");
  ev_pred_opt->excludes(ev_model_opt);
  eval->add_option("--seed", ev_seed, "Grouping seed (with --model)")->capture_default_str();

  // sweep
  std::string sw_data, sw_model, sw_source = "ensemble";
  std::uint64_t sw_seed = 0;
  auto* sweep = app.add_subcommand("sweep", "mIoU over a grid of pseudo-label thresholds");
  sweep->add_option("--data", sw_data, "Dataset directory with masks")->required();
  sweep->add_option("--model", sw_model, "Checkpoint")->required();
  sweep->add_option("--source", sw_source, "intermediate, graph or ensemble")->capture_default_str();
  sweep->add_option("--seed", sw_seed, "Grouping seed")->capture_default_str();

  // ablate
  std::string ab_train, ab_eval, ab_config, ab_variants = "table", ab_csv, ab_table;
  std::vector<std::string> ab_set;
  std::vector<std::uint64_t> ab_seeds{1};
  bool ab_parallel = false;
  auto* ablate = app.add_subcommand("ablate", "Train and score a list of config variants");
  ablate->add_option("--train", ab_train, "Training dataset directory")->required();
  ablate->add_option("--eval", ab_eval, "Evaluation dataset directory (with masks)")->required();
  ablate->add_option("--config", ab_config, "Base config file");
  ablate->add_option("--set", ab_set, "Override one base config key (key=value), repeatable");
  ablate->add_option("--variants", ab_variants,
                     "';'-separated variants, e.g. \"default;no-dropout;K=3\", or \"table\" for the full set")
      ->capture_default_str();
  ablate->add_option("--seeds", ab_seeds, "Training seeds")->delimiter(',');
  ablate->add_flag("--parallel", ab_parallel, "Run independent trainings concurrently");
  ablate->add_option("--csv", ab_csv, "Write comma-separated results here");
  ablate->add_option("--table", ab_table, "Write the text table here (also printed)");

  // bench-edge
  std::vector<std::size_t> be_w, be_h, be_c, be_d;
  std::size_t be_repeats = 3;
  std::uint64_t be_seed = 0;
  auto* bench = app.add_subcommand("bench-edge", "Edge affinity cost: counted vs. formula multiplications and timing");
  bench->add_option("--width", be_w, "W values (default: built-in sweep)")->delimiter(',');
  bench->add_option("--height", be_h, "H values, paired with --width")->delimiter(',');
  bench->add_option("--channels", be_c, "C values, paired with --width")->delimiter(',');
  bench->add_option("--reduction", be_d, "d values, paired with --width")->delimiter(',');
  bench->add_option("--repeats", be_repeats, "Timed evaluations per point")->capture_default_str();
  bench->add_option("--seed", be_seed, "Seed for the random operands")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return GWSM_ERR_USAGE;
  }

  try {
    if (*gen) {
      if (gen_size < 1) {
        std::cerr << "error: --size must be at least 1\n\n" << gen->help();
        return GWSM_ERR_USAGE;
      }
      shapes.size = static_cast<std::size_t>(gen_size);
      Dataset ds;
      check(gwsm_dataset_generate(&shapes, ds.out()));
      check(gwsm_dataset_save(ds, gen_out.c_str()));
      std::cout << "wrote " << gwsm_dataset_size(ds) << " samples to " << gen_out << "\n";
    } else if (*train) {
      Config config;
      load_config(config, train_config, train_set);
      Text echo;
      check(gwsm_config_to_text(config, echo.out()));
      std::cout << "# config\n" << gwsm_text_data(echo) << std::flush;
      Dataset ds;
      check(gwsm_dataset_load(train_data.c_str(), ds.out()));
      const std::string log_path = train_log.empty() ? train_out + ".log" : train_log;
      std::ofstream log(log_path);
      if (!log) {
        std::cerr << "error: cannot write " << log_path << "\n";
        return GWSM_ERR_DATA;
      }
      log << "# config\n" << gwsm_text_data(echo);
      LineSink sink{&log, !train_quiet};
      Model model;
      check(gwsm_train(ds, config, &LineSink::call, &sink, model.out()));
      check(gwsm_model_save(model, train_out.c_str()));
      std::cout << "checkpoint " << train_out << "\nlog " << log_path << "\n";
    } else if (*cam) {
      const auto source = parse_source(cam_source);
      Model model;
      check(gwsm_model_load(cam_model.c_str(), model.out()));
      Dataset ds;
      check(gwsm_dataset_load(cam_data.c_str(), ds.out()));
      std::size_t files = 0;
      check(gwsm_export_cams(model, ds, source, cam_seed, cam_out.c_str(), &files));
      std::cout << "wrote " << files << " files to " << cam_out << "\n";
    } else if (*pseudo) {
      const auto source = parse_source(ps_source);
      Model model;
      check(gwsm_model_load(ps_model.c_str(), model.out()));
      Dataset ds;
      check(gwsm_dataset_load(ps_data.c_str(), ds.out()));
      check(gwsm_export_pseudo_labels(model, ds, source, ps_fg, ps_bg, ps_seed, ps_out.c_str()));
      std::cout << "wrote " << gwsm_dataset_size(ds) << " masks to " << ps_out << "\n";
    } else if (*eval) {
      Dataset ds;
      check(gwsm_dataset_load(ev_data.c_str(), ds.out()));
      Text report;
      if (!ev_model.empty()) {
        Model model;
        check(gwsm_model_load(ev_model.c_str(), model.out()));
        double miou[3];
        check(gwsm_eval_model(model, ds, ev_seed, miou, report.out()));
        std::cout << gwsm_text_data(report);
        std::printf("summary intermediate=%.4f graph=%.4f ensemble=%.4f\n", miou[0], miou[1], miou[2]);
      } else if (!ev_pred.empty()) {
        double miou = 0.0;
        check(gwsm_eval_dir(ds, ev_pred.c_str(), &miou, report.out()));
        std::cout << gwsm_text_data(report);
      } else {
        std::cerr << "error: eval needs --pred or --model\n\n" << eval->help();
        return GWSM_ERR_USAGE;
      }
    } else if (*sweep) {
      const auto source = parse_source(sw_source);
      Model model;
      check(gwsm_model_load(sw_model.c_str(), model.out()));
      Dataset ds;
      check(gwsm_dataset_load(sw_data.c_str(), ds.out()));
      Text out;
      check(gwsm_threshold_sweep(model, ds, source, sw_seed, out.out()));
      std::cout << gwsm_text_data(out);
    } else if (*ablate) {
      Config config;
      load_config(config, ab_config, ab_set);
      Dataset train_ds, eval_ds;
      check(gwsm_dataset_load(ab_train.c_str(), train_ds.out()));
      check(gwsm_dataset_load(ab_eval.c_str(), eval_ds.out()));
      LineSink sink{nullptr, true};
      Text table, csv;
      check(gwsm_ablate(train_ds, eval_ds, config, ab_variants.c_str(), ab_seeds.data(), ab_seeds.size(),
                        ab_parallel ? 1 : 0, &LineSink::call, &sink, table.out(), csv.out()));
      std::cout << gwsm_text_data(table);
      if (!ab_table.empty()) write_file(ab_table, gwsm_text_data(table));
      if (!ab_csv.empty()) write_file(ab_csv, gwsm_text_data(csv));
    } else if (*bench) {
      struct Point {
        std::size_t w, h, c, d;
      };
      std::vector<Point> points;
      if (be_w.empty() && be_h.empty() && be_c.empty() && be_d.empty()) {
        points = {{2, 2, 4, 2}, {4, 4, 8, 2}, {4, 4, 16, 4}, {8, 8, 64, 4}, {8, 8, 64, 8}, {14, 14, 512, 4},
                  {28, 28, 512, 4}};
      } else {
        if (be_h.size() != be_w.size() || be_c.size() != be_w.size() || be_d.size() != be_w.size()) {
          std::cerr << "error: --width, --height, --channels and --reduction need the same number of values\n";
          return GWSM_ERR_USAGE;
        }
        for (std::size_t i = 0; i < be_w.size(); ++i) points.push_back({be_w[i], be_h[i], be_c[i], be_d[i]});
      }
      bool all_match = true;
      for (const auto& p : points) {
        gwsm_edge_bench r{};
        check(gwsm_bench_edge(p.w, p.h, p.c, p.d, be_seed, be_repeats, &r));
        const bool match = r.counted_mults_full == r.mults_full && r.counted_mults_lowrank == r.mults_lowrank;
        all_match = all_match && match;
        std::printf(
            "W=%zu H=%zu C=%zu d=%zu params_full=%llu params_lowrank=%llu mults_full=%llu mults_lowrank=%llu "
            "counted_full=%llu counted_lowrank=%llu %s t_full=%.3es t_lowrank=%.3es speedup=%.2f max_abs_diff=%.2e\n",
            p.w, p.h, p.c, p.d, static_cast<unsigned long long>(r.params_full),
            static_cast<unsigned long long>(r.params_lowrank), static_cast<unsigned long long>(r.mults_full),
            static_cast<unsigned long long>(r.mults_lowrank), static_cast<unsigned long long>(r.counted_mults_full),
            static_cast<unsigned long long>(r.counted_mults_lowrank), match ? "counter==formula" : "counter!=formula",
            r.seconds_full, r.seconds_lowrank, r.seconds_lowrank > 0 ? r.seconds_full / r.seconds_lowrank : 0.0,
            r.max_abs_diff);
      }
      if (!all_match) return GWSM_ERR_INTERNAL;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
