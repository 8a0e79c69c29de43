#pragma once

// Independent reference implementations used as test oracles. They work on
// raw vectors and never touch the tape.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "numcore/tensor.hpp"

namespace oracle {

inline double max_abs_diff(const gwsm::Tensor& a, const gwsm::Tensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_abs_diff(const gwsm::Tensor& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline std::vector<double> to_vec(const gwsm::Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Six-loop cross-correlation with zero padding.
inline std::vector<double> conv2d(const std::vector<double>& x, std::size_t cin, std::size_t h, std::size_t w,
                                  const std::vector<double>& k, std::size_t cout, std::size_t ks,
                                  const std::vector<double>& bias, std::size_t stride, std::size_t pad,
                                  std::size_t dil, std::size_t& oh, std::size_t& ow) {
  oh = (h + 2 * pad - dil * (ks - 1) - 1) / stride + 1;
  ow = (w + 2 * pad - dil * (ks - 1) - 1) / stride + 1;
  std::vector<double> out(cout * oh * ow, 0.0);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xq = 0; xq < ow; ++xq) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t ky = 0; ky < ks; ++ky)
            for (std::size_t kx = 0; kx < ks; ++kx) {
              const long iy = static_cast<long>(y * stride + ky * dil) - static_cast<long>(pad);
              const long ix = static_cast<long>(xq * stride + kx * dil) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
              acc += x[(c * h + iy) * w + ix] * k[((o * cin + c) * ks + ky) * ks + kx];
            }
        out[(o * oh + y) * ow + xq] = acc;
      }
  return out;
}

// out[p] = sum_q softmax_q(f_p · g_q) v_q + h_p over positions p, q, for
// 1x1 projections given as weight matrices [out×C].
inline std::vector<double> self_attention(const std::vector<double>& h, std::size_t c, std::size_t positions,
                                          const std::vector<double>& wf, const std::vector<double>& wg,
                                          std::size_t inner, const std::vector<double>& wh) {
  auto project = [&](const std::vector<double>& wm, std::size_t rows) {
    std::vector<double> out(rows * positions, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t p = 0; p < positions; ++p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < c; ++k) acc += wm[r * c + k] * h[k * positions + p];
        out[r * positions + p] = acc;
      }
    return out;
  };
  const auto f = project(wf, inner), g = project(wg, inner), v = project(wh, c);
  std::vector<double> out(h);
  for (std::size_t p = 0; p < positions; ++p) {
    std::vector<double> logit(positions);
    for (std::size_t q = 0; q < positions; ++q) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += f[k * positions + p] * g[k * positions + q];
      logit[q] = acc;
    }
    const double mx = *std::max_element(logit.begin(), logit.end());
    double z = 0.0;
    for (auto& l : logit) z += (l = std::exp(l - mx));
    for (std::size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (std::size_t q = 0; q < positions; ++q) acc += logit[q] / z * v[ch * positions + q];
      out[ch * positions + p] += acc;
    }
  }
  return out;
}

inline double sigmoid_ce(const std::vector<double>& logits, const std::vector<std::uint8_t>& label) {
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits[i]));
    acc += label[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return acc / static_cast<double>(logits.size());
}

struct Miou {
  std::vector<double> iou;
  std::vector<bool> defined;
  double miou = 0.0;
};

// Per-class pixel enumeration, one full pass per class.
inline Miou brute_force_miou(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt,
                             std::size_t num_classes, std::uint8_t ignore) {
  Miou r;
  r.iou.assign(num_classes + 1, 0.0);
  r.defined.assign(num_classes + 1, false);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c <= num_classes; ++c) {
    std::uint64_t inter = 0, uni = 0;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (pred[p] == ignore || gt[p] == ignore) continue;
      const bool a = pred[p] == c, b = gt[p] == c;
      inter += a && b;
      uni += a || b;
    }
    if (uni == 0) continue;
    r.defined[c] = true;
    r.iou[c] = static_cast<double>(inter) / static_cast<double>(uni);
    total += r.iou[c];
    ++n;
  }
  r.miou = n ? total / static_cast<double>(n) : 0.0;
  return r;
}

}  // namespace oracle
