// Scalar reference kernels. These define the semantics the vectorized
// variants are tested against; they favour plain loops over speed.

#include "qcnn/simd.hpp"

namespace qcnn::simd::scalar {

template <class T>
void gemm(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, int lda, const T* b,
          int ldb, T beta, T* c, int ldc) {
  const bool at = ta == Trans::yes;
  const bool bt = tb == Trans::yes;
  for (int i = 0; i < m; ++i) {
    T* row = c + static_cast<long>(i) * ldc;
    for (int j = 0; j < n; ++j) row[j] = beta == T(0) ? T(0) : beta * row[j];
    if (alpha == T(0)) continue;
    for (int p = 0; p < k; ++p) {
      const T av = alpha * (at ? a[static_cast<long>(p) * lda + i] : a[static_cast<long>(i) * lda + p]);
      if (!bt) {
        const T* brow = b + static_cast<long>(p) * ldb;
        for (int j = 0; j < n; ++j) row[j] += av * brow[j];
      } else {
        for (int j = 0; j < n; ++j) row[j] += av * b[static_cast<long>(j) * ldb + p];
      }
    }
  }
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
T dot(std::size_t n, const T* x, const T* y) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <class T>
void relu_forward(std::size_t n, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_backward(std::size_t n, const T* x, const T* gy, T* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > T(0) ? gy[i] : T(0);
}

#define QCNN_INSTANTIATE(T)                                                                     \
  template void gemm<T>(Trans, Trans, int, int, int, T, const T*, int, const T*, int, T, T*, int); \
  template void axpy<T>(std::size_t, T, const T*, T*);                                          \
  template T dot<T>(std::size_t, const T*, const T*);                                           \
  template void relu_forward<T>(std::size_t, const T*, T*);                                     \
  template void relu_backward<T>(std::size_t, const T*, const T*, T*);

QCNN_INSTANTIATE(float)
QCNN_INSTANTIATE(double)
#undef QCNN_INSTANTIATE

}  // namespace qcnn::simd::scalar
