#include "numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "numcore/errors.hpp"
#include "numcore/kernels.hpp"

namespace gwsm {

namespace {

using NodePtr = std::shared_ptr<detail::Node>;

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = active_tape();
  if (tape == nullptr) return nullptr;
  for (const auto* t : inputs) {
    if (t->defined() && t->requires_grad()) return tape;
  }
  return nullptr;
}

// Gradient buffer of an operand, or nullptr when it does not take gradients.
double* grad_sink(const NodePtr& n) {
  if (!n || !n->requires_grad) return nullptr;
  n->ensure_grad();
  return n->grad.data();
}

Tensor finish(Tensor out, Tape* tape, Tape::BackwardFn fn) {
  if (tape != nullptr) {
    out.set_requires_grad(true);
    tape->record(out.node(), std::move(fn));
  }
  return out;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& x, Forward f, Derivative df) {
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  Tensor result(x.shape(), std::move(out));
  Tape* tape = recording_tape({&x});
  if (!tape) return result;
  auto xn = x.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [xn, on, df] {
    double* gx = grad_sink(xn);
    if (!gx) return;
    for (std::size_t i = 0; i < on->data.size(); ++i) gx[i] += on->grad[i] * df(xn->data[i], on->data[i]);
  });
}

}  // namespace

std::uint64_t& multiplication_counter() {
  thread_local std::uint64_t counter = 0;
  return counter;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " · " +
                         shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data());
  multiplication_counter() += m * n * k;
  Tensor result({m, n}, std::move(out));
  Tape* tape = recording_tape({&a, &b});
  if (!tape) return result;
  auto an = a.node(), bn = b.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, bn, on, m, n, k] {
    if (double* ga = grad_sink(an)) kernels::gemm_nt(m, k, n, on->grad.data(), bn->data.data(), ga);
    if (double* gb = grad_sink(bn)) kernels::gemm_tn(k, n, m, an->data.data(), on->grad.data(), gb);
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  std::vector<double> out(rows * cols);
  const auto in = a.data();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = in[i * cols + j];
  Tensor result({cols, rows}, std::move(out));
  Tape* tape = recording_tape({&a});
  if (!tape) return result;
  auto an = a.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, on, rows, cols] {
    double* ga = grad_sink(an);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += on->grad[j * rows + i];
  });
}

Tensor row_softmax(const Tensor& a) {
  require_rank(a, 2, "row_softmax");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  std::vector<double> out(rows * cols);
  const auto in = a.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = in.data() + i * cols;
    double* y = out.data() + i * cols;
    const double peak = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - peak);
      total += y[j];
    }
    for (std::size_t j = 0; j < cols; ++j) y[j] /= total;
  }
  Tensor result({rows, cols}, std::move(out));
  Tape* tape = recording_tape({&a});
  if (!tape) return result;
  auto an = a.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, on, rows, cols] {
    double* ga = grad_sink(an);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = on->data.data() + i * cols;
      const double* gy = on->grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  Tensor result(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  Tape* tape = recording_tape({&a});
  if (!tape) return result;
  auto an = a.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, on] {
    double* ga = grad_sink(an);
    for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += on->grad[i];
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw DimensionError("concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  Tensor result({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(out));
  Tape* tape = recording_tape({&a, &b});
  if (!tape) return result;
  auto an = a.node(), bn = b.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, bn, on] {
    const std::size_t split = an->data.size();
    if (double* ga = grad_sink(an))
      for (std::size_t i = 0; i < split; ++i) ga[i] += on->grad[i];
    if (double* gb = grad_sink(bn))
      for (std::size_t i = 0; i < bn->data.size(); ++i) gb[i] += on->grad[split + i];
  });
}

Tensor channels_to_rows(const Tensor& x) {
  require_rank(x, 3, "channels_to_rows");
  return transpose(reshape(x, {x.dim(0), x.dim(1) * x.dim(2)}));
}

Tensor rows_to_channels(const Tensor& rows, std::size_t height, std::size_t width) {
  require_rank(rows, 2, "rows_to_channels");
  if (rows.dim(0) != height * width) {
    throw DimensionError("rows_to_channels: " + shape_str(rows.shape()) + " is not " +
                         std::to_string(height) + "x" + std::to_string(width) + " positions");
  }
  return reshape(transpose(rows), {rows.dim(1), height, width});
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  Tensor result(a.shape(), std::move(out));
  Tape* tape = recording_tape({&a, &b});
  if (!tape) return result;
  auto an = a.node(), bn = b.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, bn, on] {
    if (double* ga = grad_sink(an))
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += on->grad[i];
    if (double* gb = grad_sink(bn))
      for (std::size_t i = 0; i < on->grad.size(); ++i) gb[i] += on->grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  Tensor result(a.shape(), std::move(out));
  Tape* tape = recording_tape({&a, &b});
  if (!tape) return result;
  auto an = a.node(), bn = b.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, bn, on] {
    if (double* ga = grad_sink(an))
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += on->grad[i];
    if (double* gb = grad_sink(bn))
      for (std::size_t i = 0; i < on->grad.size(); ++i) gb[i] -= on->grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  Tensor result(a.shape(), std::move(out));
  Tape* tape = recording_tape({&a, &b});
  if (!tape) return result;
  auto an = a.node(), bn = b.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [an, bn, on] {
    if (double* ga = grad_sink(an))
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += on->grad[i] * bn->data[i];
    if (double* gb = grad_sink(bn))
      for (std::size_t i = 0; i < on->grad.size(); ++i) gb[i] += on->grad[i] * an->data[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

namespace {
thread_local BranchTrace* g_branch_trace = nullptr;
}

BranchTrace::BranchTrace() : previous_(g_branch_trace) { g_branch_trace = this; }
BranchTrace::~BranchTrace() { g_branch_trace = previous_; }
BranchTrace* active_branch_trace() { return g_branch_trace; }

Tensor relu(const Tensor& x) {
  if (auto* trace = g_branch_trace) {
    std::uint64_t word = 0;
    std::size_t bit = 0;
    for (double v : x.data()) {
      word |= std::uint64_t{v > 0.0} << bit;
      if (++bit == 64) {
        trace->note(word);
        word = 0;
        bit = 0;
      }
    }
    trace->note(word);
  }
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& x) {
  return unary(
      x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor result({1}, {total});
  Tape* tape = recording_tape({&x});
  if (!tape) return result;
  auto xn = x.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [xn, on] {
    double* gx = grad_sink(xn);
    const double g = on->grad[0];
    for (std::size_t i = 0; i < xn->data.size(); ++i) gx[i] += g;
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean_over_channels(const Tensor& x) {
  require_rank(x, 3, "mean_over_channels");
  const std::size_t channels = x.dim(0), plane = x.dim(1) * x.dim(2);
  std::vector<double> out(plane, 0.0);
  const auto in = x.data();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < plane; ++p) out[p] += in[c * plane + p];
  for (auto& v : out) v /= static_cast<double>(channels);
  Tensor result({x.dim(1), x.dim(2)}, std::move(out));
  Tape* tape = recording_tape({&x});
  if (!tape) return result;
  auto xn = x.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [xn, on, channels, plane] {
    double* gx = grad_sink(xn);
    const double inv = 1.0 / static_cast<double>(channels);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < plane; ++p) gx[c * plane + p] += on->grad[p] * inv;
  });
}

Tensor global_average_pool(const Tensor& x) {
  require_rank(x, 3, "global_average_pool");
  const std::size_t channels = x.dim(0), plane = x.dim(1) * x.dim(2);
  std::vector<double> out(channels, 0.0);
  const auto in = x.data();
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < plane; ++p) acc += in[c * plane + p];
    out[c] = acc / static_cast<double>(plane);
  }
  Tensor result({channels}, std::move(out));
  Tape* tape = recording_tape({&x});
  if (!tape) return result;
  auto xn = x.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [xn, on, channels, plane] {
    double* gx = grad_sink(xn);
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < plane; ++p) gx[c * plane + p] += on->grad[c] * inv;
  });
}

Tensor spatial_mul(const Tensor& x, const Tensor& s) {
  require_rank(x, 3, "spatial_mul");
  require_rank(s, 2, "spatial_mul");
  if (s.dim(0) != x.dim(1) || s.dim(1) != x.dim(2)) {
    throw DimensionError("spatial_mul: mask " + shape_str(s.shape()) + " does not fit " + shape_str(x.shape()));
  }
  const std::size_t channels = x.dim(0), plane = s.numel();
  std::vector<double> out(x.numel());
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < plane; ++p) out[c * plane + p] = x[c * plane + p] * s[p];
  Tensor result(x.shape(), std::move(out));
  Tape* tape = recording_tape({&x, &s});
  if (!tape) return result;
  auto xn = x.node(), sn = s.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [xn, sn, on, channels, plane] {
    double* gx = grad_sink(xn);
    double* gs = grad_sink(sn);
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t p = 0; p < plane; ++p) {
        const double g = on->grad[c * plane + p];
        if (gx) gx[c * plane + p] += g * sn->data[p];
        if (gs) gs[p] += g * xn->data[c * plane + p];
      }
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, Conv2dOptions options) {
  require_rank(x, 3, "conv2d");
  require_rank(kernel, 4, "conv2d");
  const std::size_t out_channels = kernel.dim(0), k = kernel.dim(2);
  if (kernel.dim(1) != x.dim(0)) {
    throw DimensionError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input channels, got " +
                         std::to_string(x.dim(0)));
  }
  if (kernel.dim(3) != k || k % 2 == 0) throw DimensionError("conv2d: kernel must be square with odd size");
  if (options.stride == 0 || options.dilation == 0) throw ContractError("conv2d: stride and dilation must be positive");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_channels)) {
    throw DimensionError("conv2d: bias must have one entry per output channel");
  }
  kernels::ConvGeometry g{};
  g.in_channels = x.dim(0);
  g.height = x.dim(1);
  g.width = x.dim(2);
  g.kernel = k;
  g.stride = options.stride;
  g.padding = options.padding;
  g.dilation = options.dilation;
  const long span = static_cast<long>(options.dilation * (k - 1) + 1);
  const long padded_h = static_cast<long>(g.height + 2 * g.padding);
  const long padded_w = static_cast<long>(g.width + 2 * g.padding);
  if (padded_h < span || padded_w < span) throw DimensionError("conv2d: kernel larger than padded input");
  g.out_height = static_cast<std::size_t>((padded_h - span) / static_cast<long>(g.stride) + 1);
  g.out_width = static_cast<std::size_t>((padded_w - span) / static_cast<long>(g.stride) + 1);

  const std::size_t patch = g.in_channels * k * k;
  const std::size_t plane = g.out_height * g.out_width;
  auto cols = std::make_shared<std::vector<double>>(patch * plane);
  kernels::im2col(g, x.data().data(), cols->data());
  std::vector<double> out(out_channels * plane, 0.0);
  if (bias.defined()) {
    for (std::size_t o = 0; o < out_channels; ++o) std::fill_n(out.begin() + o * plane, plane, bias[o]);
  }
  kernels::gemm_nn(out_channels, plane, patch, kernel.data().data(), cols->data(), out.data());
  Tensor result({out_channels, g.out_height, g.out_width}, std::move(out));
  Tape* tape = recording_tape({&x, &kernel, &bias});
  if (!tape) return result;
  auto xn = x.node(), kn = kernel.node(), bn = bias.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [xn, kn, bn, on, cols, g, out_channels, patch, plane] {
    const double* gout = on->grad.data();
    if (double* gk = grad_sink(kn)) kernels::gemm_nt(out_channels, patch, plane, gout, cols->data(), gk);
    if (double* gb = grad_sink(bn)) {
      for (std::size_t o = 0; o < out_channels; ++o)
        for (std::size_t p = 0; p < plane; ++p) gb[o] += gout[o * plane + p];
    }
    if (double* gx = grad_sink(xn)) {
      std::vector<double> gcols(patch * plane, 0.0);
      kernels::gemm_tn(patch, plane, out_channels, kn->data.data(), gout, gcols.data());
      kernels::col2im(g, gcols.data(), gx);
    }
  });
}

Tensor max_pool2d(const Tensor& x, std::size_t window) {
  require_rank(x, 3, "max_pool2d");
  if (window == 0 || x.dim(1) % window != 0 || x.dim(2) % window != 0) {
    throw DimensionError("max_pool2d: " + shape_str(x.shape()) + " not divisible by window " + std::to_string(window));
  }
  const std::size_t channels = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h / window, ow = w / window;
  std::vector<double> out(channels * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  const auto in = x.data();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = c * h * w + oy * window * w + ox * window;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx = c * h * w + (oy * window + dy) * w + ox * window + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (c * oh + oy) * ow + ox;
        out[o] = in[best];
        argmax[o] = best;
      }
    }
  }
  if (auto* trace = g_branch_trace) {
    for (std::size_t a : argmax) trace->note(a);
  }
  Tensor result({channels, oh, ow}, std::move(out));
  Tape* tape = recording_tape({&x});
  if (!tape) return result;
  auto xn = x.node();
  detail::Node* on = result.node().get();
  return finish(result, tape, [xn, on, argmax = std::move(argmax)] {
    double* gx = grad_sink(xn);
    for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += on->grad[o];
  });
}

}  // namespace gwsm
