#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qcnn/random.hpp"
#include "qcnn/simd.hpp"

using namespace qcnn;
using simd::Isa;
using simd::Trans;

namespace {

std::vector<Isa> vector_isas() {
  std::vector<Isa> out;
  for (Isa i : {Isa::avx2, Isa::avx512})
    if (simd::isa_supported(i)) out.push_back(i);
  return out;
}

struct IsaGuard {
  Isa saved = simd::active_isa();
  ~IsaGuard() { simd::set_isa(saved); }
};

template <class T>
std::vector<T> random_vec(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = T(uniform(rng, -1, 1));
  return v;
}

template <class T>
void gemm_matches_scalar(double tol) {
  IsaGuard guard;
  Rng rng(77);
  const int sizes[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 32, 16}, {17, 33, 9}, {64, 70, 129}, {9, 300, 27}, {130, 7, 65}};
  for (Isa isa : vector_isas()) {
    simd::set_isa(isa);
    for (const auto& sz : sizes)
      for (Trans ta : {Trans::no, Trans::yes})
        for (Trans tb : {Trans::no, Trans::yes})
          for (T beta : {T(0), T(1), T(-0.5)}) {
            const int m = sz[0], n = sz[1], k = sz[2];
            const int lda = (ta == Trans::no ? k : m) + 3, ldb = (tb == Trans::no ? n : k) + 2, ldc = n + 5;
            const auto a = random_vec<T>(std::size_t(ta == Trans::no ? m : k) * lda, rng);
            const auto b = random_vec<T>(std::size_t(tb == Trans::no ? k : n) * ldb, rng);
            auto c0 = random_vec<T>(std::size_t(m) * ldc, rng);
            auto c1 = c0;
            simd::scalar::gemm<T>(ta, tb, m, n, k, T(0.75), a.data(), lda, b.data(), ldb, beta, c0.data(), ldc);
            simd::gemm<T>(ta, tb, m, n, k, T(0.75), a.data(), lda, b.data(), ldb, beta, c1.data(), ldc);
            double worst = 0.0;
            for (int i = 0; i < m; ++i)
              for (int j = 0; j < ldc; ++j) {
                const std::size_t idx = std::size_t(i) * ldc + j;
                if (j >= n) {
                  REQUIRE(c0[idx] == c1[idx]);  // padding columns untouched
                  continue;
                }
                worst = std::max(worst, std::abs(double(c0[idx]) - double(c1[idx])) / (1.0 + std::abs(double(c0[idx]))));
              }
            INFO(simd::isa_name(isa), " m=", m, " n=", n, " k=", k, " ta=", int(ta), " tb=", int(tb));
            CHECK(worst < tol * k);
          }
  }
}

template <class T>
void vector_ops_match_scalar(double tol) {
  IsaGuard guard;
  Rng rng(5);
  for (Isa isa : vector_isas()) {
    simd::set_isa(isa);
    for (std::size_t n : {0u, 1u, 7u, 8u, 15u, 16u, 33u, 1000u}) {
      const auto x = random_vec<T>(n, rng), gy = random_vec<T>(n, rng);
      auto y0 = random_vec<T>(n, rng), y1 = y0;
      simd::scalar::axpy<T>(n, T(1.5), x.data(), y0.data());
      simd::axpy<T>(n, T(1.5), x.data(), y1.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(double(y0[i]) - double(y1[i])) <= tol);
      const double d0 = simd::scalar::dot<T>(n, x.data(), gy.data()), d1 = simd::dot<T>(n, x.data(), gy.data());
      CHECK(std::abs(d0 - d1) <= tol * (1.0 + double(n)));
      std::vector<T> r0(n), r1(n), g0(n), g1(n);
      simd::scalar::relu_forward<T>(n, x.data(), r0.data());
      simd::relu_forward<T>(n, x.data(), r1.data());
      CHECK(r0 == r1);
      simd::scalar::relu_backward<T>(n, x.data(), gy.data(), g0.data());
      simd::relu_backward<T>(n, x.data(), gy.data(), g1.data());
      CHECK(g0 == g1);
    }
  }
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar gemm against a naive triple loop") {
    Rng rng(1);
    const int m = 5, n = 6, k = 4;
    const auto a = random_vec<double>(m * k, rng), b = random_vec<double>(k * n, rng);
    std::vector<double> c(m * n, 0.0);
    simd::scalar::gemm<double>(Trans::no, Trans::no, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0, c.data(), n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
        CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-14));
      }
  }

  TEST_CASE("beta zero ignores NaN in C") {
    const double a = 2, b = 3;
    double c = std::nan("");
    simd::gemm<double>(Trans::no, Trans::no, 1, 1, 1, 1.0, &a, 1, &b, 1, 0.0, &c, 1);
    CHECK(c == 6.0);
  }

  TEST_CASE("vector gemm equals scalar, float") { gemm_matches_scalar<float>(1e-6); }
  TEST_CASE("vector gemm equals scalar, double") { gemm_matches_scalar<double>(1e-14); }
  TEST_CASE("vector axpy, dot and relu equal scalar, float") { vector_ops_match_scalar<float>(1e-6); }
  TEST_CASE("vector axpy, dot and relu equal scalar, double") { vector_ops_match_scalar<double>(1e-14); }

  TEST_CASE("isa selection") {
    IsaGuard guard;
    CHECK(simd::isa_supported(Isa::scalar));
    simd::set_isa(Isa::scalar);
    CHECK(simd::active_isa() == Isa::scalar);
    CHECK(simd::isa_name(Isa::avx512) == "avx512");
    if (!simd::isa_supported(Isa::avx512)) CHECK_THROWS_AS(simd::set_isa(Isa::avx512), std::invalid_argument);
  }
}
