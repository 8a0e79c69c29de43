#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "numcore/tensor.hpp"

namespace gwsm {

using NamedTensor = std::pair<std::string, Tensor>;
using NamedTensors = std::vector<NamedTensor>;

inline std::vector<Tensor> tensors_of(const NamedTensors& named) {
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

// He-style fan-in scaled Gaussian for a [out×in×k×k] kernel.
inline Tensor he_kernel(std::size_t out, std::size_t in, std::size_t k, Rng& rng, double gain = 2.0) {
  const double stddev = std::sqrt(gain / static_cast<double>(in * k * k));
  return Tensor::randn({out, in, k, k}, rng, stddev, true);
}

}  // namespace gwsm
