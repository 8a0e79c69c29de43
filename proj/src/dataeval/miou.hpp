#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gwsm {

struct EvalReport {
  std::vector<double> iou;       // length L+1, index 0 = background
  std::vector<bool> defined;     // class occurs in prediction or ground truth
  std::vector<std::uint64_t> intersection, union_, gt_pixels, pred_pixels;
  double miou = 0.0;
  std::uint64_t scored_pixels = 0;

  std::string to_text() const;
};

// Confusion-free tally over any number of masks; pixels where either side
// equals ignore_value are skipped.
class MiouAccumulator {
 public:
  MiouAccumulator(std::size_t num_classes, std::uint8_t ignore_value);

  void add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);
  EvalReport report() const;

 private:
  std::size_t classes_;  // including background
  std::uint8_t ignore_;
  std::vector<std::uint64_t> intersection_, pred_, gt_;
  std::uint64_t scored_ = 0;
};

EvalReport miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, std::size_t num_classes,
                std::uint8_t ignore_value = 255);

}  // namespace gwsm
