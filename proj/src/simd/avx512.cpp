// AVX-512F kernels. Compiled with -mavx512f -mfma; only reached when the
// dispatcher has confirmed host support.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace qcnn::simd::detail::avx512 {
namespace {

#include "packed_gemm.inc"

template <class V, class T, int MR, class Load, class Bcast, class Fma, class Store>
inline void micro_tile(int kc, const T* a, const T* b, T alpha, T* c, int ldc, int lanes, Load load,
                       Bcast bcast, Fma fma, Store store) {
  V acc[MR][2];
  for (int r = 0; r < MR; ++r) acc[r][0] = acc[r][1] = V{};
  for (int p = 0; p < kc; ++p) {
    const V b0 = load(b);
    const V b1 = load(b + lanes);
    for (int r = 0; r < MR; ++r) {
      const V ar = bcast(a[r]);
      acc[r][0] = fma(ar, b0, acc[r][0]);
      acc[r][1] = fma(ar, b1, acc[r][1]);
    }
    a += MR;
    b += 2 * lanes;
  }
  const V va = bcast(alpha);
  for (int r = 0; r < MR; ++r) {
    T* row = c + static_cast<long>(r) * ldc;
    store(row, fma(va, acc[r][0], load(row)));
    store(row + lanes, fma(va, acc[r][1], load(row + lanes)));
  }
}

inline void micro_f32(int kc, const float* a, const float* b, float alpha, float* c, int ldc) {
  micro_tile<__m512, float, 8>(
      kc, a, b, alpha, c, ldc, 16, [](const float* p) { return _mm512_loadu_ps(p); },
      [](float v) { return _mm512_set1_ps(v); },
      [](__m512 x, __m512 y, __m512 z) { return _mm512_fmadd_ps(x, y, z); },
      [](float* p, __m512 v) { _mm512_storeu_ps(p, v); });
}

inline void micro_f64(int kc, const double* a, const double* b, double alpha, double* c, int ldc) {
  micro_tile<__m512d, double, 8>(
      kc, a, b, alpha, c, ldc, 8, [](const double* p) { return _mm512_loadu_pd(p); },
      [](double v) { return _mm512_set1_pd(v); },
      [](__m512d x, __m512d y, __m512d z) { return _mm512_fmadd_pd(x, y, z); },
      [](double* p, __m512d v) { _mm512_storeu_pd(p, v); });
}

}  // namespace

void gemm_f32(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
              const float* b, int ldb, float beta, float* c, int ldc, float* ws) {
  packed_gemm<float, 8, 32, 128, 3072>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc, ws,
                                       micro_f32);
}

void gemm_f64(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
              const double* b, int ldb, double beta, double* c, int ldc, double* ws) {
  packed_gemm<double, 8, 16, 128, 2048>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc, ws,
                                        micro_f64);
}

void axpy_f32(std::size_t n, float alpha, const float* x, float* y) {
  const __m512 va = _mm512_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16)
    _mm512_storeu_ps(y + i, _mm512_fmadd_ps(va, _mm512_loadu_ps(x + i), _mm512_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64(std::size_t n, double alpha, const double* x, double* y) {
  const __m512d va = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(va, _mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

float dot_f32(std::size_t n, const float* x, const float* y) {
  __m512 acc = _mm512_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) acc = _mm512_fmadd_ps(_mm512_loadu_ps(x + i), _mm512_loadu_ps(y + i), acc);
  float s = _mm512_reduce_add_ps(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double dot_f64(std::size_t n, const double* x, const double* y) {
  __m512d acc = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc);
  double s = _mm512_reduce_add_pd(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void relu_forward_f32(std::size_t n, const float* x, float* y) {
  const __m512 zero = _mm512_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) _mm512_storeu_ps(y + i, _mm512_max_ps(_mm512_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_forward_f64(std::size_t n, const double* x, double* y) {
  const __m512d zero = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm512_storeu_pd(y + i, _mm512_max_pd(_mm512_loadu_pd(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_f32(std::size_t n, const float* x, const float* gy, float* gx) {
  const __m512 zero = _mm512_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __mmask16 m = _mm512_cmp_ps_mask(_mm512_loadu_ps(x + i), zero, _CMP_GT_OQ);
    _mm512_storeu_ps(gx + i, _mm512_maskz_mov_ps(m, _mm512_loadu_ps(gy + i)));
  }
  for (; i < n; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

void relu_backward_f64(std::size_t n, const double* x, const double* gy, double* gx) {
  const __m512d zero = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __mmask8 m = _mm512_cmp_pd_mask(_mm512_loadu_pd(x + i), zero, _CMP_GT_OQ);
    _mm512_storeu_pd(gx + i, _mm512_maskz_mov_pd(m, _mm512_loadu_pd(gy + i)));
  }
  for (; i < n; ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
}

}  // namespace qcnn::simd::detail::avx512
