#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qcnn/error.hpp"
#include "qcnn/quat.hpp"
#include "qcnn/random.hpp"

using namespace qcnn;

TEST_SUITE("quat") {
  TEST_CASE("basis products follow i j = k") {
    const Quaternion i{0, 1, 0, 0}, j{0, 0, 1, 0}, k{0, 0, 0, 1}, minus_one{-1, 0, 0, 0};
    CHECK(i * j == k);
    CHECK(j * i == Quaternion{0, 0, 0, -1});
    CHECK(j * k == i);
    CHECK(k * i == j);
    CHECK(i * i == minus_one);
    CHECK(i * j * k == minus_one);
  }

  TEST_CASE("norm is multiplicative and conjugate inverts the rotor") {
    const Quaternion p{1, -2, 0.5, 3}, q{-0.25, 1, 2, -1};
    CHECK(norm(p * q) == doctest::Approx(norm(p) * norm(q)).epsilon(1e-14));
    const Quaternion w = gray_rotor(0.7);
    const Quaternion id = w * conjugate(w);
    CHECK(id.w == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(id.x) + std::abs(id.y) + std::abs(id.z) < 1e-15);
  }

  TEST_CASE("color relabeling round trips") {
    const ColorVector v{0.1, 0.2, 0.3};
    CHECK(to_quaternion(v) == Quaternion{0, 0.1, 0.2, 0.3});
    CHECK(to_color(to_quaternion(v)) == v);
  }

  TEST_CASE("circulant form equals s w q w* for random angles") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const double theta = uniform(rng, -10, 10), s = uniform(rng, -2, 2);
      const ColorVector v{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
      const ColorVector lit = rotate_about_axis(v, kGrayAxis, theta);
      const ColorVector mat = apply_color_rotation(s, theta, v);
      CHECK(mat.r == doctest::Approx(s * lit.r).epsilon(1e-12).scale(1.0));
      CHECK(mat.g == doctest::Approx(s * lit.g).epsilon(1e-12).scale(1.0));
      CHECK(mat.b == doctest::Approx(s * lit.b).epsilon(1e-12).scale(1.0));
    }
  }

  TEST_CASE("rotation coefficients at known angles") {
    const RotationCoeffs zero = rotation_coeffs(0.0);
    CHECK(zero.f1 == doctest::Approx(1.0));
    CHECK(std::abs(zero.f2) < 1e-15);
    CHECK(std::abs(zero.f3) < 1e-15);
    // 2pi/3 about the gray axis cycles r -> g -> b.
    const Vec3 out = mat_vec(rotation_matrix(2 * std::numbers::pi / 3), {1, 0, 0});
    CHECK(std::abs(out[0]) < 1e-15);
    CHECK(out[1] == doctest::Approx(1.0));
    CHECK(std::abs(out[2]) < 1e-15);
    const RotationCoeffs f = rotation_coeffs(1.234);
    CHECK(f.f1 + f.f2 + f.f3 == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("angle derivative matches central differences") {
    for (double t : {-2.0, -0.3, 0.0, 0.9, 2.5}) {
      const double h = 1e-6;
      const RotationCoeffs d = rotation_coeffs_deriv(t), p = rotation_coeffs(t + h), m = rotation_coeffs(t - h);
      CHECK(d.f1 == doctest::Approx((p.f1 - m.f1) / (2 * h)).epsilon(1e-8));
      CHECK(d.f2 == doctest::Approx((p.f2 - m.f2) / (2 * h)).epsilon(1e-8));
      CHECK(d.f3 == doctest::Approx((p.f3 - m.f3) / (2 * h)).epsilon(1e-8));
    }
  }

  TEST_CASE("non-unit axis is rejected") {
    CHECK_THROWS_AS(rotate_about_axis({1, 0, 0}, {1, 1, 1}, 0.5), PreconditionError);
  }
}
