#pragma once

// Rotations and rigid transforms.
//
// Everything below is templated on the scalar so the same code paths run
// with double and with (nested) dual numbers. Rotations are kept as 3x3
// matrices; quaternions only appear as a constructor input.

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "bimanifold/errors.hpp"
#include "bimanifold/geometry/dual.hpp"

namespace bimanifold {

template <class T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <class T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <class T> using Vec6 = Eigen::Matrix<T, 6, 1>;
template <class T> using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Vector3 = Vec3<double>;
using Matrix3 = Mat3<double>;
using Vector6 = Vec6<double>;

/// Rotation angle beyond which the log map refuses to pick a branch.
inline constexpr double kLogPiMargin = 1e-6;

template <class T>
Mat3<T> hat(const Vec3<T>& w) {
  Mat3<T> m;
  m << T(0), -w(2), w(1),
       w(2), T(0), -w(0),
      -w(1), w(0), T(0);
  return m;
}

template <class T>
Vec3<T> vee(const Mat3<T>& m) {
  return Vec3<T>(m(2, 1), m(0, 2), m(1, 0));
}

/// Rodrigues formula. Uses a Taylor series near zero so that derivatives
/// through dual numbers stay finite at the identity.
template <class T>
Mat3<T> so3_exp(const Vec3<T>& w) {
  using std::sin, std::cos, std::sqrt;
  const T theta2 = w.dot(w);
  T a, b;
  if (primal(theta2) < 1e-8) {
    // sin(t)/t and (1-cos t)/t^2 to O(t^8)
    a = T(1) - theta2 / T(6) + theta2 * theta2 / T(120) - theta2 * theta2 * theta2 / T(5040);
    b = T(0.5) - theta2 / T(24) + theta2 * theta2 / T(720) - theta2 * theta2 * theta2 / T(40320);
  } else {
    const T theta = sqrt(theta2);
    a = sin(theta) / theta;
    b = (T(1) - cos(theta)) / theta2;
  }
  const Mat3<T> k = hat(w);
  return Mat3<T>::Identity() + a * k + b * (k * k);
}

/// Rotation about a unit axis.
template <class T>
Mat3<T> axis_rotation(const Vector3& unit_axis, const T& angle) {
  using std::sin, std::cos;
  const T s = sin(angle);
  const T c = cos(angle);
  const Mat3<T> k = hat<double>(unit_axis).template cast<T>();
  return Mat3<T>::Identity() + s * k + (T(1) - c) * (k * k);
}

namespace detail {

// atan(sqrt(u)) / sqrt(u), analytic at u = 0.
template <class T>
T atan_sqrt_ratio(const T& u) {
  using std::atan, std::sqrt;
  if (primal(u) < 1e-6) {
    return T(1) - u / T(3) + u * u / T(5) - u * u * u / T(7) + u * u * u * u / T(9) -
           u * u * u * u * u / T(11);
  }
  const T r = sqrt(u);
  return atan(r) / r;
}

}  // namespace detail

/// Axis-angle logarithm. Throws RotationNearPi within kLogPiMargin of pi.
template <class T>
Vec3<T> so3_log(const Mat3<T>& r) {
  using std::atan2, std::sqrt;
  const Vec3<T> v = vee<T>(r - r.transpose()) / T(2);  // sin(theta) * axis
  const T c = (r.trace() - T(1)) / T(2);               // cos(theta)
  const T s2 = v.dot(v);
  if (primal(c) > 0.0) {
    // theta / sin(theta) = atan(s/c) / (s/c) / c
    const T ratio = detail::atan_sqrt_ratio<T>(s2 / (c * c)) / c;
    return ratio * v;
  }
  const T s = sqrt(s2);
  const T theta = atan2(s, c);
  if (primal(theta) > std::numbers::pi - kLogPiMargin) {
    throw Error(ErrorCode::RotationNearPi,
                "rotation angle " + std::to_string(primal(theta)) + " too close to pi");
  }
  // Axis from the symmetric part: (R + R^T)/2 - c I = (1 - c) k k^T.
  const Mat3<T> sym = (r + r.transpose()) / T(2) - c * Mat3<T>::Identity();
  int col = 0;
  for (int i = 1; i < 3; ++i) {
    if (primal(sym(i, i)) > primal(sym(col, col))) col = i;
  }
  Vec3<T> axis = sym.col(col) / sqrt(sym(col, col) * (T(1) - c));
  if (primal(axis.dot(v)) < 0.0) axis = -axis;
  return theta * axis;
}

/// Rotation angle of R1^T R2 in [0, pi].
inline double geodesic_distance(const Matrix3& r1, const Matrix3& r2) {
  const Matrix3 d = r1.transpose() * r2;
  const double s = vee<double>(d - d.transpose()).norm() / 2.0;
  const double c = (d.trace() - 1.0) / 2.0;
  return std::atan2(s, c);
}

/// Validated rotation matrix.
class Rotation {
 public:
  Rotation() : m_(Matrix3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  static Rotation from_axis_angle(const Vector3& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero rotation axis");
    return Rotation(axis_rotation<double>(axis / n, angle));
  }

  static Rotation from_rotation_vector(const Vector3& w) { return Rotation(so3_exp<double>(w)); }

  /// Quaternion (w, x, y, z). Inputs within 1e-9 of unit norm are
  /// renormalized; anything else is rejected.
  static Rotation from_quaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (std::abs(n - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "quaternion norm " + std::to_string(n));
    }
    return Rotation(Eigen::Quaterniond(w / n, x / n, y / n, z / n).toRotationMatrix());
  }

  /// Accepts a matrix that is orthonormal with det +1 within 1e-9; the
  /// result is re-orthonormalized.
  static Rotation from_matrix(const Matrix3& m) {
    if ((m.transpose() * m - Matrix3::Identity()).norm() > 1e-9 || std::abs(m.determinant() - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "matrix is not a rotation");
    }
    Eigen::Quaterniond q(m);
    q.normalize();
    return Rotation(q.toRotationMatrix());
  }

  /// Fixed-axis roll/pitch/yaw: Rz(yaw) * Ry(pitch) * Rx(roll).
  static Rotation from_rpy(double roll, double pitch, double yaw) {
    return Rotation(axis_rotation<double>(Vector3::UnitZ(), yaw) *
                    axis_rotation<double>(Vector3::UnitY(), pitch) *
                    axis_rotation<double>(Vector3::UnitX(), roll));
  }

  const Matrix3& matrix() const { return m_; }
  Vector3 log() const { return so3_log<double>(m_); }
  double angle() const { return geodesic_distance(Matrix3::Identity(), m_); }
  Rotation inverse() const { return Rotation(m_.transpose()); }

  friend Rotation operator*(const Rotation& a, const Rotation& b) { return Rotation(a.m_ * b.m_); }

 private:
  explicit Rotation(const Matrix3& m) : m_(m) {}
  Matrix3 m_;
};

inline double geodesic_distance(const Rotation& r1, const Rotation& r2) {
  return geodesic_distance(r1.matrix(), r2.matrix());
}

/// (roll, pitch, yaw) with R = Rz(yaw) Ry(pitch) Rx(roll).
inline Vector3 rpy_from_matrix(const Matrix3& r) {
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

}  // namespace bimanifold
