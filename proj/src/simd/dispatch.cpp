#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernels_internal.hpp"
#include "qcnn/simd.hpp"

namespace qcnn::simd {
namespace {

bool host_has(Isa isa) {
#if defined(__x86_64__) || defined(__i386__)
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::avx512:
      return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
  }
  return false;
#else
  return isa == Isa::scalar;
#endif
}

Isa initial_isa() {
  Isa isa = detected_isa();
  if (const char* env = std::getenv("QCNN_ISA")) {
    const std::string v = env;
    const Isa wanted = v == "scalar" ? Isa::scalar : v == "avx2" ? Isa::avx2 : v == "avx512" ? Isa::avx512 : isa;
    if (host_has(wanted)) isa = wanted;
  }
  return isa;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

template <class T>
T* workspace() {
  thread_local std::vector<T> ws(detail::kGemmWorkspace);
  return ws.data();
}

}  // namespace

Isa detected_isa() {
  if (host_has(Isa::avx512)) return Isa::avx512;
  if (host_has(Isa::avx2)) return Isa::avx2;
  return Isa::scalar;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool isa_supported(Isa isa) { return host_has(isa); }

void set_isa(Isa isa) {
  if (!host_has(isa)) throw std::invalid_argument("instruction set not supported by this CPU: " + std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::avx512:
      return "avx512";
  }
  return "unknown";
}

template <>
void gemm<float>(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
  const bool at = ta == Trans::yes, bt = tb == Trans::yes;
  switch (active_isa()) {
    case Isa::avx512:
      return detail::avx512::gemm_f32(at, bt, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc, workspace<float>());
    case Isa::avx2:
      return detail::avx2::gemm_f32(at, bt, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc, workspace<float>());
    case Isa::scalar:
      break;
  }
  scalar::gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <>
void gemm<double>(Trans ta, Trans tb, int m, int n, int k, double alpha, const double* a, int lda,
                  const double* b, int ldb, double beta, double* c, int ldc) {
  const bool at = ta == Trans::yes, bt = tb == Trans::yes;
  switch (active_isa()) {
    case Isa::avx512:
      return detail::avx512::gemm_f64(at, bt, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc, workspace<double>());
    case Isa::avx2:
      return detail::avx2::gemm_f64(at, bt, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc, workspace<double>());
    case Isa::scalar:
      break;
  }
  scalar::gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

#define QCNN_DISPATCH(name, suffix, T, args, call_args)   \
  template <>                                              \
  auto name<T> args -> decltype(scalar::name<T> call_args) { \
    switch (active_isa()) {                                \
      case Isa::avx512:                                    \
        return detail::avx512::name##_##suffix call_args;  \
      case Isa::avx2:                                      \
        return detail::avx2::name##_##suffix call_args;    \
      case Isa::scalar:                                    \
        break;                                             \
    }                                                      \
    return scalar::name<T> call_args;                      \
  }

QCNN_DISPATCH(axpy, f32, float, (std::size_t n, float alpha, const float* x, float* y), (n, alpha, x, y))
QCNN_DISPATCH(axpy, f64, double, (std::size_t n, double alpha, const double* x, double* y), (n, alpha, x, y))
QCNN_DISPATCH(dot, f32, float, (std::size_t n, const float* x, const float* y), (n, x, y))
QCNN_DISPATCH(dot, f64, double, (std::size_t n, const double* x, const double* y), (n, x, y))
QCNN_DISPATCH(relu_forward, f32, float, (std::size_t n, const float* x, float* y), (n, x, y))
QCNN_DISPATCH(relu_forward, f64, double, (std::size_t n, const double* x, double* y), (n, x, y))
QCNN_DISPATCH(relu_backward, f32, float, (std::size_t n, const float* x, const float* gy, float* gx), (n, x, gy, gx))
QCNN_DISPATCH(relu_backward, f64, double, (std::size_t n, const double* x, const double* gy, double* gx), (n, x, gy, gx))

#undef QCNN_DISPATCH

}  // namespace qcnn::simd
