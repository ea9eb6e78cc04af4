#pragma once

// Data-parallel inner loops used by every layer. Each routine has a scalar
// reference implementation (namespace qcnn::simd::scalar) and vectorized
// variants that are selected once at runtime from the host CPU features.
// The free functions in qcnn::simd dispatch to the active variant.

#include <cstddef>
#include <string_view>

namespace qcnn::simd {

enum class Isa { scalar, avx2, avx512 };

/// Best instruction set the host supports (ignores QCNN_ISA).
Isa detected_isa();

/// Instruction set currently used by the dispatching entry points. Starts as
/// detected_isa(), or as the value of the QCNN_ISA environment variable
/// ("scalar", "avx2", "avx512") when that is set and supported.
Isa active_isa();

/// Forces an instruction set. Throws std::invalid_argument if the host cannot
/// run it.
void set_isa(Isa isa);

bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);

enum class Trans { no, yes };

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C, with op(A) m x k and
// op(B) k x n. beta == 0 overwrites C without reading it.
template <class T>
void gemm(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

// y += alpha * x
template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y);

template <class T>
T dot(std::size_t n, const T* x, const T* y);

// y = max(x, 0)
template <class T>
void relu_forward(std::size_t n, const T* x, T* y);

// gx = gy where x > 0, else 0
template <class T>
void relu_backward(std::size_t n, const T* x, const T* gy, T* gx);

namespace scalar {
template <class T>
void gemm(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);
template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y);
template <class T>
T dot(std::size_t n, const T* x, const T* y);
template <class T>
void relu_forward(std::size_t n, const T* x, T* y);
template <class T>
void relu_backward(std::size_t n, const T* x, const T* gy, T* gx);
}  // namespace scalar

}  // namespace qcnn::simd
