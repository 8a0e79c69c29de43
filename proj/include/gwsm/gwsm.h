#ifndef GWSM_GWSM_H
#define GWSM_GWSM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GWSM_BUILDING)
#    define GWSM_API __declspec(dllexport)
#  else
#    define GWSM_API __declspec(dllimport)
#  endif
#else
#  define GWSM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns one of these. The values double as CLI exit codes. */
typedef enum gwsm_status {
  GWSM_OK = 0,
  GWSM_ERR_USAGE = 1,    /* bad argument, out-of-range config, contract violation */
  GWSM_ERR_DATA = 2,     /* unreadable or malformed file, bad manifest, bad checkpoint */
  GWSM_ERR_NUMERIC = 3,  /* non-finite loss during training */
  GWSM_ERR_INTERNAL = 4
} gwsm_status;

typedef enum gwsm_cam_source {
  GWSM_CAM_INTERMEDIATE = 0,
  GWSM_CAM_GRAPH = 1,
  GWSM_CAM_ENSEMBLE = 2
} gwsm_cam_source;

typedef struct gwsm_config gwsm_config;
typedef struct gwsm_dataset gwsm_dataset;
typedef struct gwsm_model gwsm_model;
typedef struct gwsm_text gwsm_text;

/* Message of the last failed call on this thread ("" if none). */
GWSM_API const char* gwsm_last_error(void);
GWSM_API const char* gwsm_version(void);

/* Owned text returned by several calls. */
GWSM_API const char* gwsm_text_data(const gwsm_text* text);
GWSM_API size_t gwsm_text_size(const gwsm_text* text);
GWSM_API void gwsm_text_free(gwsm_text* text);

/* ---- configuration: flat `key = value` text ---- */
GWSM_API gwsm_status gwsm_config_new(gwsm_config** out);
GWSM_API gwsm_status gwsm_config_parse(const char* text, gwsm_config** out);
GWSM_API gwsm_status gwsm_config_load(const char* path, gwsm_config** out);
GWSM_API gwsm_status gwsm_config_set(gwsm_config* config, const char* key, const char* value);
/* Value of one key in canonical text form. */
GWSM_API gwsm_status gwsm_config_get(const gwsm_config* config, const char* key, gwsm_text** out);
GWSM_API gwsm_status gwsm_config_to_text(const gwsm_config* config, gwsm_text** out);
GWSM_API void gwsm_config_free(gwsm_config* config);

/* ---- datasets ---- */
typedef struct gwsm_shapes_options {
  size_t size;
  uint64_t seed;
  size_t canvas;
  int64_t first_id;
  size_t min_objects, max_objects;
  double min_radius, max_radius; /* fractions of the canvas side */
} gwsm_shapes_options;

GWSM_API void gwsm_shapes_options_default(gwsm_shapes_options* options);
GWSM_API gwsm_status gwsm_dataset_generate(const gwsm_shapes_options* options, gwsm_dataset** out);
/* DIR/manifest.tsv plus images/ and masks/. */
GWSM_API gwsm_status gwsm_dataset_load(const char* dir, gwsm_dataset** out);
GWSM_API gwsm_status gwsm_dataset_save(const gwsm_dataset* dataset, const char* dir);
GWSM_API size_t gwsm_dataset_size(const gwsm_dataset* dataset);
GWSM_API void gwsm_dataset_free(gwsm_dataset* dataset);

/* ---- training and checkpoints ---- */
/* Called once per line of progress output (no trailing newline). */
typedef void (*gwsm_line_fn)(const char* line, void* user);

GWSM_API gwsm_status gwsm_train(const gwsm_dataset* dataset, const gwsm_config* config, gwsm_line_fn on_line,
                                void* user, gwsm_model** out);
GWSM_API gwsm_status gwsm_model_save(const gwsm_model* model, const char* path);
GWSM_API gwsm_status gwsm_model_load(const char* path, gwsm_model** out);
/* Copy of the configuration the model was trained with. */
GWSM_API gwsm_status gwsm_model_config(const gwsm_model* model, gwsm_config** out);
GWSM_API void gwsm_model_free(gwsm_model* model);

/* ---- CAMs, pseudo-labels, evaluation ---- */
/* One PGM heatmap per class per image (<stem>_c<k>.pgm, zero for absent
   classes) plus a <stem>_overlay.ppm. files_written may be NULL. */
GWSM_API gwsm_status gwsm_export_cams(const gwsm_model* model, const gwsm_dataset* dataset, gwsm_cam_source source,
                                      uint64_t seed, const char* out_dir, size_t* files_written);
/* <stem>.pgm per image, value = class id, 0 background, 255 ignore.
   Negative thresholds fall back to the model's configuration. */
GWSM_API gwsm_status gwsm_export_pseudo_labels(const gwsm_model* model, const gwsm_dataset* dataset,
                                               gwsm_cam_source source, double theta_fg, double theta_bg,
                                               uint64_t seed, const char* out_dir);
/* Scores <stem>.pgm masks in pred_dir against the dataset's ground truth. */
GWSM_API gwsm_status gwsm_eval_dir(const gwsm_dataset* dataset, const char* pred_dir, double* miou,
                                   gwsm_text** report);
/* mIoU of the intermediate, graph and ensemble pseudo-labels. report may be NULL. */
GWSM_API gwsm_status gwsm_eval_model(const gwsm_model* model, const gwsm_dataset* dataset, uint64_t seed,
                                     double miou[3], gwsm_text** report);
/* mIoU over a grid of (theta_fg, theta_bg) pairs; one line per pair. */
GWSM_API gwsm_status gwsm_threshold_sweep(const gwsm_model* model, const gwsm_dataset* dataset,
                                          gwsm_cam_source source, uint64_t seed, gwsm_text** out);

/* ---- ablation harness ---- */
/* variants: ';'-separated list like "default;no-dropout;K=3;delta_r=0.6,delta_d=0.7",
   or "table" for the full diagnostic set. table and csv may be NULL. */
GWSM_API gwsm_status gwsm_ablate(const gwsm_dataset* train_set, const gwsm_dataset* eval_set,
                                 const gwsm_config* base, const char* variants, const uint64_t* seeds,
                                 size_t seed_count, int parallel, gwsm_line_fn on_line, void* user,
                                 gwsm_text** table, gwsm_text** csv);

/* ---- edge cost benchmark ---- */
typedef struct gwsm_edge_bench {
  uint64_t params_full, params_lowrank;
  uint64_t mults_full, mults_lowrank;                 /* formulas */
  uint64_t counted_mults_full, counted_mults_lowrank; /* instrumented */
  double seconds_full, seconds_lowrank;               /* mean per evaluation */
  double max_abs_diff;                                /* full with W = P Q^T vs low-rank */
} gwsm_edge_bench;

GWSM_API gwsm_status gwsm_bench_edge(size_t width, size_t height, size_t channels, size_t reduction, uint64_t seed,
                                     size_t repeats, gwsm_edge_bench* out);

#ifdef __cplusplus
}
#endif

#endif
