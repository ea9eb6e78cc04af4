#pragma once

// Entry points exported by the ISA-specific translation units. Only the
// dispatcher includes this header.

#include <cstddef>

namespace qcnn::simd::detail {

// Largest workspace any gemm variant needs, in elements.
constexpr std::size_t kGemmWorkspace = 128 * 256 + 256 * 3072;

#define QCNN_DECLARE_ISA_KERNELS(ns)                                                          \
  namespace ns {                                                                              \
  void gemm_f32(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,  \
                const float* b, int ldb, float beta, float* c, int ldc, float* ws);           \
  void gemm_f64(bool ta, bool tb, int m, int n, int k, double alpha, const double* a,        \
                int lda, const double* b, int ldb, double beta, double* c, int ldc,          \
                double* ws);                                                                  \
  void axpy_f32(std::size_t n, float alpha, const float* x, float* y);                        \
  void axpy_f64(std::size_t n, double alpha, const double* x, double* y);                     \
  float dot_f32(std::size_t n, const float* x, const float* y);                               \
  double dot_f64(std::size_t n, const double* x, const double* y);                            \
  void relu_forward_f32(std::size_t n, const float* x, float* y);                             \
  void relu_forward_f64(std::size_t n, const double* x, double* y);                           \
  void relu_backward_f32(std::size_t n, const float* x, const float* gy, float* gx);          \
  void relu_backward_f64(std::size_t n, const double* x, const double* gy, double* gx);       \
  }

QCNN_DECLARE_ISA_KERNELS(avx2)
QCNN_DECLARE_ISA_KERNELS(avx512)

#undef QCNN_DECLARE_ISA_KERNELS

}  // namespace qcnn::simd::detail
