#pragma once

#include <functional>
#include <span>

#include "numcore/tensor.hpp"

namespace gwsm {

// Central-difference oracle. Returns the max over coordinates of
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// f must be deterministic; it is evaluated on a fresh tape for the analytic
// gradient and with recording paused for the perturbed evaluations.
// When x ± eps lands on a different relu / max_pool2d branch than x the
// difference quotient straddles a kink, so the step is divided by 4 (at most
// 6 times) for that coordinate.
double check_gradients(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps = 1e-5);

// Same oracle over several leaves captured by f (perturbed in place).
double check_gradients(const std::function<Tensor()>& f, std::span<const Tensor> leaves, double eps = 1e-5);

struct GradientReport {
  double max_rel_error = 0.0;
  std::size_t worst_leaf = 0, worst_index = 0;
  double analytic = 0.0, numeric = 0.0;  // at the worst coordinate
  std::size_t coordinates = 0;
  std::size_t shrunk = 0;  // coordinates that needed a smaller step
};

GradientReport gradient_report(const std::function<Tensor()>& f, std::span<const Tensor> leaves, double eps = 1e-5);

}  // namespace gwsm
