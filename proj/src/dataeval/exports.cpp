#include "dataeval/exports.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dataeval/dataset_io.hpp"
#include "dataeval/netpbm.hpp"
#include "numcore/errors.hpp"

namespace gwsm {

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

std::vector<std::uint8_t> heatmap_pixels(const Tensor& cams, std::size_t channel, std::size_t out_h, std::size_t out_w) {
  if (cams.rank() != 3 || channel >= cams.dim(0)) throw DimensionError("heatmap_pixels: bad channel");
  const std::size_t h = cams.dim(1), w = cams.dim(2);
  std::vector<std::uint8_t> out(out_h * out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      out[y * out_w + x] = to_byte(cams[(channel * h + y * h / out_h) * w + x * w / out_w]);
    }
  }
  return out;
}

std::size_t export_cams(const std::vector<CamStack>& cams, const Dataset& dataset, CamSource source,
                        const std::string& dir) {
  if (cams.size() != dataset.size()) throw DimensionError("export_cams: one CAM stack per sample expected");
  ensure_dir(dir);
  std::size_t written = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    const Tensor& c = cams[i].get(source);
    const std::string stem = dir + "/" + sample_stem(s);
    std::vector<double> peak(s.height * s.width, 0.0);
    for (std::size_t k = 0; k < c.dim(0); ++k) {
      const auto px = heatmap_pixels(c, k, s.height, s.width);
      for (std::size_t p = 0; p < px.size(); ++p) peak[p] = std::max(peak[p], px[p] / 255.0);
      write_pgm(stem + "_c" + std::to_string(k + 1) + ".pgm", s.width, s.height, px);
      ++written;
    }
    auto rgb = image_to_rgb8(s.image);
    for (std::size_t p = 0; p < peak.size(); ++p) {
      const double a = 0.6 * peak[p];
      rgb[3 * p] = to_byte((1.0 - a) * rgb[3 * p] / 255.0 + a);
      rgb[3 * p + 1] = to_byte((1.0 - a) * rgb[3 * p + 1] / 255.0);
      rgb[3 * p + 2] = to_byte((1.0 - a) * rgb[3 * p + 2] / 255.0);
    }
    write_ppm(stem + "_overlay.ppm", s.width, s.height, rgb);
    ++written;
  }
  return written;
}

void export_pseudo_labels(const std::vector<PseudoLabel>& labels, const Dataset& dataset, const std::string& dir) {
  if (labels.size() != dataset.size()) throw DimensionError("export_pseudo_labels: one label per sample expected");
  ensure_dir(dir);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    write_pgm(dir + "/" + sample_stem(dataset[i]) + ".pgm", labels[i].width, labels[i].height, labels[i].mask);
  }
}

EvalReport evaluate_prediction_dir(const Dataset& dataset, const std::string& dir, std::size_t num_classes) {
  MiouAccumulator acc(num_classes, kIgnoreLabel);
  for (const auto& s : dataset) {
    if (s.gt_mask.empty()) throw DataError("sample " + std::to_string(s.id) + " has no ground-truth mask");
    const std::string path = dir + "/" + sample_stem(s) + ".pgm";
    const Image8 pred = read_netpbm(path);
    if (pred.channels != 1 || pred.width != s.width || pred.height != s.height) {
      throw DataError(path + ": expected a " + std::to_string(s.width) + "x" + std::to_string(s.height) + " graymap");
    }
    acc.add(pred.pixels, s.gt_mask);
  }
  return acc.report();
}

}  // namespace gwsm
