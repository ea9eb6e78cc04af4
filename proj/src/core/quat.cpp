#include "qcnn/quat.hpp"

#include <cmath>

#include "qcnn/error.hpp"

namespace qcnn {

Quaternion hamilton_product(const Quaternion& p, const Quaternion& q) {
  return {
      p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
      p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
      p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
      p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
  };
}

Quaternion conjugate(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

double squared_norm(const Quaternion& q) { return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z; }

double norm(const Quaternion& q) { return std::sqrt(squared_norm(q)); }

Quaternion to_quaternion(const ColorVector& v) { return {0.0, v.r, v.g, v.b}; }

ColorVector to_color(const Quaternion& q) { return {q.x, q.y, q.z}; }

ColorVector rotate_about_axis(const ColorVector& v, const Vec3& axis, double theta) {
  const double len = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(std::abs(len - 1.0) <= 1e-9)) throw PreconditionError("rotation axis must have unit length");
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const Quaternion w{c, s * axis[0], s * axis[1], s * axis[2]};
  return to_color(hamilton_product(hamilton_product(w, to_quaternion(v)), conjugate(w)));
}

Quaternion gray_rotor(double theta) {
  const double s = std::sin(theta / 2.0);
  return {std::cos(theta / 2.0), s * kGrayAxis[0], s * kGrayAxis[1], s * kGrayAxis[2]};
}

RotationCoeffs rotation_coeffs(double theta) {
  constexpr double third = 1.0 / 3.0;
  constexpr double two_thirds = 2.0 / 3.0;
  constexpr double pi3 = std::numbers::pi / 3.0;
  return {third + two_thirds * std::cos(theta), third - two_thirds * std::cos(theta - pi3),
          third - two_thirds * std::cos(theta + pi3)};
}

RotationCoeffs rotation_coeffs_deriv(double theta) {
  constexpr double two_thirds = 2.0 / 3.0;
  constexpr double pi3 = std::numbers::pi / 3.0;
  return {-two_thirds * std::sin(theta), two_thirds * std::sin(theta - pi3),
          two_thirds * std::sin(theta + pi3)};
}

Mat3 circulant(const RotationCoeffs& f) {
  return {{{f.f1, f.f2, f.f3}, {f.f3, f.f1, f.f2}, {f.f2, f.f3, f.f1}}};
}

Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  Vec3 out{};
  for (int r = 0; r < 3; ++r) out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2];
  return out;
}

ColorVector apply_color_rotation(double s, double theta, const ColorVector& v) {
  const Vec3 p = mat_vec(rotation_matrix(theta), {v.r, v.g, v.b});
  return {s * p[0], s * p[1], s * p[2]};
}

}  // namespace qcnn
