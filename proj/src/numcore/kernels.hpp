#pragma once

#include <cstddef>

// Untaped dense kernels on raw row-major buffers. All of them accumulate
// into C (C += ...), callers zero C when a fresh product is wanted.
namespace gwsm::kernels {

// C[M×N] += A[M×K] · B[K×N]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
// C[M×N] += A[M×K] · B[N×K]ᵀ
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
// C[M×N] += A[K×M]ᵀ · B[K×N]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);

struct ConvGeometry {
  std::size_t in_channels, height, width;
  std::size_t kernel, stride, padding, dilation;
  std::size_t out_height, out_width;
};

// cols is [in_channels*kernel*kernel × out_height*out_width].
void im2col(const ConvGeometry& g, const double* x, double* cols);
// Scatter-add of cols back into x (adjoint of im2col).
void col2im(const ConvGeometry& g, const double* cols, double* x);

}  // namespace gwsm::kernels
