#include "dataeval/miou.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "numcore/errors.hpp"

namespace gwsm {

MiouAccumulator::MiouAccumulator(std::size_t num_classes, std::uint8_t ignore_value)
    : classes_(num_classes + 1),
      ignore_(ignore_value),
      intersection_(classes_, 0),
      pred_(classes_, 0),
      gt_(classes_, 0) {}

void MiouAccumulator::add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw DimensionError("miou: prediction and ground truth differ in size");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = pred[i], g = gt[i];
    if (p == ignore_ || g == ignore_) continue;
    if (p >= classes_ || g >= classes_) throw DataError("miou: class id " + std::to_string(std::max(p, g)) + " out of range");
    ++pred_[p];
    ++gt_[g];
    if (p == g) ++intersection_[p];
    ++scored_;
  }
}

EvalReport MiouAccumulator::report() const {
  EvalReport r;
  r.iou.assign(classes_, 0.0);
  r.defined.assign(classes_, false);
  r.intersection = intersection_;
  r.gt_pixels = gt_;
  r.pred_pixels = pred_;
  r.union_.assign(classes_, 0);
  r.scored_pixels = scored_;
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes_; ++c) {
    r.union_[c] = pred_[c] + gt_[c] - intersection_[c];
    if (r.union_[c] == 0) continue;
    r.defined[c] = true;
    r.iou[c] = static_cast<double>(intersection_[c]) / static_cast<double>(r.union_[c]);
    total += r.iou[c];
    ++counted;
  }
  r.miou = counted ? total / static_cast<double>(counted) : 0.0;
  return r;
}

EvalReport miou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt, std::size_t num_classes,
                std::uint8_t ignore_value) {
  MiouAccumulator acc(num_classes, ignore_value);
  acc.add(pred, gt);
  return acc.report();
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  char buf[128];
  os << "class      iou      intersection  union\n";
  for (std::size_t c = 0; c < iou.size(); ++c) {
    if (defined[c]) {
      std::snprintf(buf, sizeof(buf), "%-8zu  %7.4f  %12llu  %llu\n", c, iou[c],
                    static_cast<unsigned long long>(intersection[c]), static_cast<unsigned long long>(union_[c]));
    } else {
      std::snprintf(buf, sizeof(buf), "%-8zu  %7s  %12s  %s\n", c, "-", "-", "-");
    }
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "mIoU %.4f over %llu pixels\n", miou, static_cast<unsigned long long>(scored_pixels));
  os << buf;
  return os.str();
}

}  // namespace gwsm
