#pragma once

// Quaternion algebra and the gray-axis rotation used by quaternion layers.
//
// A quaternion convolution tap scales a color vector by s and rotates it by
// theta about the gray axis (1,1,1)/sqrt(3). In matrix form that is s * M(theta)
// with the circulant
//
//         | f1 f2 f3 |
//   M  =  | f3 f1 f2 |     f1 = 1/3 + 2/3 cos(theta)
//         | f2 f3 f1 |     f2 = 1/3 - 2/3 cos(theta - pi/3)
//                          f3 = 1/3 - 2/3 cos(theta + pi/3)
//
// rotate_about_axis() computes the same rotation literally as w q w* and is
// kept as the independent reference for the matrix form.

#include <array>
#include <numbers>

namespace qcnn {

struct Quaternion {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

struct ColorVector {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const ColorVector&, const ColorVector&) = default;
};

struct RotationCoeffs {
  double f1 = 1.0;
  double f2 = 0.0;
  double f3 = 0.0;
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

/// Unit gray axis (1,1,1)/sqrt(3).
inline constexpr Vec3 kGrayAxis = {std::numbers::inv_sqrt3, std::numbers::inv_sqrt3,
                                   std::numbers::inv_sqrt3};

Quaternion hamilton_product(const Quaternion& p, const Quaternion& q);
inline Quaternion operator*(const Quaternion& p, const Quaternion& q) { return hamilton_product(p, q); }

Quaternion conjugate(const Quaternion& q);
double squared_norm(const Quaternion& q);
double norm(const Quaternion& q);

/// Lossless (r,g,b) <-> (0, x, y, z) relabeling.
Quaternion to_quaternion(const ColorVector& v);
/// Drops the real part; callers pass pure quaternions.
ColorVector to_color(const Quaternion& q);

/// w v w* with w = cos(theta/2) + sin(theta/2) * axis. Throws
/// PreconditionError unless |axis| == 1 within 1e-9.
ColorVector rotate_about_axis(const ColorVector& v, const Vec3& axis, double theta);

/// Unit rotation quaternion for a gray-axis rotation by theta.
Quaternion gray_rotor(double theta);

RotationCoeffs rotation_coeffs(double theta);

/// Element-wise d/dtheta of rotation_coeffs.
RotationCoeffs rotation_coeffs_deriv(double theta);

/// The circulant built from (f1, f2, f3); rows (f1 f2 f3), (f3 f1 f2), (f2 f3 f1).
Mat3 circulant(const RotationCoeffs& f);
inline Mat3 rotation_matrix(double theta) { return circulant(rotation_coeffs(theta)); }

Vec3 mat_vec(const Mat3& m, const Vec3& v);

/// s * M(theta) * v, the per-tap operation of quaternion convolution.
ColorVector apply_color_rotation(double s, double theta, const ColorVector& v);

}  // namespace qcnn
