// Exercises the shared library through its C header only.
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "gwsm/gwsm.h"

namespace fs = std::filesystem;

TEST_CASE("config handles") {
  gwsm_config* c = nullptr;
  REQUIRE(gwsm_config_new(&c) == GWSM_OK);
  gwsm_text* t = nullptr;
  REQUIRE(gwsm_config_get(c, "K", &t) == GWSM_OK);
  CHECK(std::string(gwsm_text_data(t)) == "4");
  gwsm_text_free(t);
  CHECK(gwsm_config_set(c, "K", "3") == GWSM_OK);
  REQUIRE(gwsm_config_get(c, "K", &t) == GWSM_OK);
  CHECK(std::string(gwsm_text_data(t)) == "3");
  CHECK(gwsm_text_size(t) == 1);
  gwsm_text_free(t);
  CHECK(gwsm_config_set(c, "nope", "3") == GWSM_ERR_USAGE);
  CHECK(std::string(gwsm_last_error()).find("nope") != std::string::npos);
  CHECK(gwsm_config_set(c, "delta_r", "1.5") == GWSM_ERR_USAGE);
  CHECK(gwsm_config_get(c, "nope", &t) == GWSM_ERR_USAGE);
  gwsm_config_free(c);

  CHECK(gwsm_config_parse("K = 5\nT = 2\n", &c) == GWSM_OK);
  REQUIRE(gwsm_config_to_text(c, &t) == GWSM_OK);
  CHECK(std::string(gwsm_text_data(t)).find("K = 5\nT = 2\n") == 0);
  gwsm_text_free(t);
  gwsm_config_free(c);
  c = nullptr;
  CHECK(gwsm_config_parse("K == ", &c) == GWSM_ERR_DATA);
  CHECK(c == nullptr);
  CHECK(gwsm_config_load("/nonexistent.cfg", &c) == GWSM_ERR_DATA);
  CHECK(gwsm_config_new(nullptr) == GWSM_ERR_USAGE);
  gwsm_config_free(nullptr);
}

TEST_CASE("dataset, train, checkpoint and evaluation") {
  const fs::path dir = fs::temp_directory_path() / "gwsm_test_capi";
  fs::remove_all(dir);
  gwsm_shapes_options o;
  gwsm_shapes_options_default(&o);
  CHECK(o.canvas == 32);
  o.size = 6;
  o.canvas = 16;
  gwsm_dataset* ds = nullptr;
  REQUIRE(gwsm_dataset_generate(&o, &ds) == GWSM_OK);
  CHECK(gwsm_dataset_size(ds) == 6);
  REQUIRE(gwsm_dataset_save(ds, (dir / "data").c_str()) == GWSM_OK);
  gwsm_dataset* loaded = nullptr;
  REQUIRE(gwsm_dataset_load((dir / "data").c_str(), &loaded) == GWSM_OK);
  CHECK(gwsm_dataset_load((dir / "missing").c_str(), &ds) == GWSM_ERR_DATA);

  gwsm_config* c = nullptr;
  REQUIRE(gwsm_config_parse("channels = 8\nd = 2\nepochs = 1\nK = 2\nT = 1\n", &c) == GWSM_OK);
  int lines = 0;
  gwsm_model* m = nullptr;
  REQUIRE(gwsm_train(loaded, c, [](const char*, void* u) { ++*static_cast<int*>(u); }, &lines, &m) == GWSM_OK);
  CHECK(lines == 3);
  REQUIRE(gwsm_model_save(m, (dir / "m.ckpt").c_str()) == GWSM_OK);
  gwsm_model* back = nullptr;
  REQUIRE(gwsm_model_load((dir / "m.ckpt").c_str(), &back) == GWSM_OK);
  gwsm_config* mc = nullptr;
  REQUIRE(gwsm_model_config(back, &mc) == GWSM_OK);
  gwsm_text* t = nullptr;
  REQUIRE(gwsm_config_get(mc, "channels", &t) == GWSM_OK);
  CHECK(std::string(gwsm_text_data(t)) == "8");
  gwsm_text_free(t);

  double miou[3] = {-1, -1, -1};
  REQUIRE(gwsm_eval_model(back, loaded, 0, miou, nullptr) == GWSM_OK);
  for (double v : miou) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  size_t files = 0;
  REQUIRE(gwsm_export_cams(back, loaded, GWSM_CAM_GRAPH, 0, (dir / "cams").c_str(), &files) == GWSM_OK);
  CHECK(files == 6 * 7);
  REQUIRE(gwsm_export_pseudo_labels(back, loaded, GWSM_CAM_GRAPH, -1, -1, 0, (dir / "pl").c_str()) == GWSM_OK);
  double from_dir = -1;
  REQUIRE(gwsm_eval_dir(loaded, (dir / "pl").c_str(), &from_dir, nullptr) == GWSM_OK);
  CHECK(from_dir == miou[1]);
  CHECK(gwsm_export_pseudo_labels(back, loaded, GWSM_CAM_GRAPH, 0.1, 0.2, 0, (dir / "pl").c_str()) ==
        GWSM_ERR_USAGE);
  CHECK(gwsm_export_cams(back, loaded, static_cast<gwsm_cam_source>(7), 0, (dir / "cams").c_str(), nullptr) ==
        GWSM_ERR_USAGE);

  CHECK(gwsm_model_load((dir / "nothing.ckpt").c_str(), &back) == GWSM_ERR_DATA);
  CHECK(gwsm_train(nullptr, c, nullptr, nullptr, &m) == GWSM_ERR_USAGE);

  gwsm_text *table = nullptr, *csv = nullptr;
  const uint64_t seeds[] = {1};
  REQUIRE(gwsm_ablate(loaded, loaded, c, "default", seeds, 1, 0, nullptr, nullptr, &table, &csv) == GWSM_OK);
  CHECK(std::string(gwsm_text_data(csv)).find("default,1,graph,") != std::string::npos);
  gwsm_text_free(table);
  gwsm_text_free(csv);

  gwsm_config_free(mc);
  gwsm_config_free(c);
  gwsm_model_free(m);
  gwsm_model_free(back);
  gwsm_dataset_free(ds);
  gwsm_dataset_free(loaded);
}

TEST_CASE("edge benchmark through the C API") {
  gwsm_edge_bench r;
  REQUIRE(gwsm_bench_edge(2, 2, 4, 2, 0, 1, &r) == GWSM_OK);
  CHECK(r.mults_full == 128);
  CHECK(r.mults_lowrank == 96);
  CHECK(r.counted_mults_full == 128);
  CHECK(r.counted_mults_lowrank == 96);
  CHECK(r.params_full == 16);
  CHECK(r.max_abs_diff < 1e-12);
  CHECK(gwsm_bench_edge(2, 2, 6, 4, 0, 1, &r) == GWSM_ERR_USAGE);
  CHECK(std::strlen(gwsm_version()) > 0);
}
