#pragma once

#include <cstdint>

#include "numcore/tensor.hpp"

namespace gwsm {

// Scalar multiplications performed by matmul on this thread since start.
std::uint64_t& multiplication_counter();

class MultiplicationCount {
 public:
  MultiplicationCount() : start_(multiplication_counter()) {}
  std::uint64_t elapsed() const { return multiplication_counter() - start_; }

 private:
  std::uint64_t start_;
};

// Running digest of the piecewise branches (relu signs, max_pool2d winners)
// taken on this thread while in scope. Two evaluations with equal digests
// lie on the same smooth piece.
class BranchTrace {
 public:
  BranchTrace();
  ~BranchTrace();
  BranchTrace(const BranchTrace&) = delete;
  BranchTrace& operator=(const BranchTrace&) = delete;
  std::uint64_t digest() const { return digest_; }
  void note(std::uint64_t value) { digest_ = (digest_ ^ value) * 0x100000001b3ULL; }

 private:
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  BranchTrace* previous_;
};

BranchTrace* active_branch_trace();

// 2-D linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor row_softmax(const Tensor& a);

// Shape manipulation
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat_channels(const Tensor& a, const Tensor& b);
// [C×H×W] -> [HW×C], one row per spatial position.
Tensor channels_to_rows(const Tensor& x);
// [HW×C] -> [C×H×W]
Tensor rows_to_channels(const Tensor& rows, std::size_t height, std::size_t width);

// Elementwise
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
// log(1 + e^x) in overflow-free form.
Tensor softplus(const Tensor& x);

// Reductions
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// [C×H×W] -> [H×W]
Tensor mean_over_channels(const Tensor& x);
// [C×H×W] -> [C]
Tensor global_average_pool(const Tensor& x);

// [C×H×W] scaled per position by s[H×W].
Tensor spatial_mul(const Tensor& x, const Tensor& s);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t dilation = 1;
};

// Cross-correlation of x[C_in×H×W] with kernel[C_out×C_in×k×k]; bias is
// optional ([C_out]).
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias = {}, Conv2dOptions options = {});

// Non-overlapping max pooling with a square window; H and W must be divisible.
Tensor max_pool2d(const Tensor& x, std::size_t window = 2);

}  // namespace gwsm
