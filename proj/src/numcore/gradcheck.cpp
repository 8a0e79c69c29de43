#include "numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "numcore/errors.hpp"
#include "numcore/ops.hpp"

namespace gwsm {

GradientReport gradient_report(const std::function<Tensor()>& f, std::span<const Tensor> leaves, double eps) {
  std::vector<bool> previous_flags;
  for (auto leaf : leaves) {
    previous_flags.push_back(leaf.requires_grad());
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    const Tensor loss = f();
    if (loss.numel() != 1) throw ContractError("check_gradients: f must return a scalar");
    if (loss.requires_grad()) tape.backward(loss);
    for (const auto& leaf : leaves) {
      if (leaf.has_grad()) {
        analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
      } else {
        analytic.emplace_back(leaf.numel(), 0.0);
      }
    }
  }

  GradientReport report;
  TapeScope paused(nullptr);
  auto traced = [&f](std::uint64_t& digest) {
    BranchTrace trace;
    const double v = f().item();
    digest = trace.digest();
    return v;
  };
  std::uint64_t base = 0;
  traced(base);
  constexpr int kMaxShrink = 6;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    Tensor leaf = leaves[l];
    auto values = leaf.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      double step = eps, numeric = 0.0;
      for (int attempt = 0;; ++attempt) {
        std::uint64_t d_up = 0, d_down = 0;
        values[i] = original + step;
        const double up = traced(d_up);
        values[i] = original - step;
        const double down = traced(d_down);
        values[i] = original;
        numeric = (up - down) / (2.0 * step);
        if ((d_up == base && d_down == base) || attempt == kMaxShrink) break;
        if (attempt == 0) ++report.shrunk;
        step /= 4.0;
      }
      const double a = analytic[l][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++report.coordinates;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_leaf = l;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }

  for (std::size_t l = 0; l < leaves.size(); ++l) {
    Tensor leaf = leaves[l];
    leaf.zero_grad();
    leaf.set_requires_grad(previous_flags[l]);
  }
  return report;
}

double check_gradients(const std::function<Tensor()>& f, std::span<const Tensor> leaves, double eps) {
  return gradient_report(f, leaves, eps).max_rel_error;
}

double check_gradients(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
  const Tensor leaf = x;
  return check_gradients([&] { return f(leaf); }, std::span<const Tensor>(&leaf, 1), eps);
}

}  // namespace gwsm
