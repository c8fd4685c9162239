#pragma once

// Paden-Kahan style subproblems for rotations about unit axes through the
// origin. All vectors share one frame.

#include <cmath>
#include <numbers>
#include <optional>

#include "bimanifold/geometry/so3.hpp"

namespace bimanifold::subproblem {

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

/// theta minimizing |R(k, theta) p - q|.
inline double rotate_onto(const Vector3& k, const Vector3& p, const Vector3& q) {
  return std::atan2(k.dot(p.cross(q)), p.dot(q) - k.dot(p) * k.dot(q));
}

/// Solutions of |R(k, theta) p1 - p2| = d, as theta = center +/- half_width.
struct CircleDistance {
  double center = 0.0;
  double half_width = 0.0;
};

inline std::optional<CircleDistance> rotate_to_distance(const Vector3& k, const Vector3& p1, const Vector3& p2,
                                                        double d) {
  const Vector3 p1p = p1 - k.dot(p1) * k;
  const Vector3 p2p = p2 - k.dot(p2) * k;
  const double axial = k.dot(p1 - p2);
  const double dp2 = d * d - axial * axial;
  const double n1 = p1p.norm();
  const double n2 = p2p.norm();
  if (n1 < 1e-12 || n2 < 1e-12) return std::nullopt;
  double c = (n1 * n1 + n2 * n2 - dp2) / (2.0 * n1 * n2);
  if (c > 1.0 + 1e-12 || c < -1.0 - 1e-12) return std::nullopt;
  c = std::clamp(c, -1.0, 1.0);
  return CircleDistance{rotate_onto(k, p1p, p2p), std::acos(c)};
}

/// R(k1, t1) R(k2, t2) R(k3, t3) = m for three rotation axes of a spherical
/// joint group. `flip` selects the second of the two solutions.
struct SphericalSolution {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
};

namespace detail {

inline Vector3 branch_normal(const Vector3& k1, const Vector3& k2) { return k2.cross(k1).normalized(); }

}  // namespace detail

inline std::optional<SphericalSolution> solve_spherical(const Vector3& k1, const Vector3& k2, const Vector3& k3,
                                                        const Matrix3& m, bool flip) {
  const Vector3 v = m * k3;
  // c = R(k2, t2) k3 = R(k1, -t1) v
  const double kk = k1.dot(k2);
  const double denom = 1.0 - kk * kk;
  if (denom < 1e-12) return std::nullopt;
  const double a1 = k1.dot(v);
  const double a2 = k2.dot(k3);
  const double alpha = (a1 - kk * a2) / denom;
  const double beta = (a2 - kk * a1) / denom;
  const Vector3 base = alpha * k1 + beta * k2;
  double g2 = 1.0 - base.squaredNorm();
  if (g2 < -1e-9) return std::nullopt;
  g2 = std::max(g2, 0.0);
  const double gamma = (flip ? -1.0 : 1.0) * std::sqrt(g2);
  const Vector3 c = base + gamma * detail::branch_normal(k1, k2);

  SphericalSolution s;
  s.t1 = rotate_onto(k1, c, v);
  s.t2 = rotate_onto(k2, k3, c);
  const Matrix3 r12 = axis_rotation<double>(k1, s.t1) * axis_rotation<double>(k2, s.t2);
  const Matrix3 r3 = r12.transpose() * m;
  Vector3 p = k3.cross(Vector3::UnitX());
  if (p.norm() < 0.1) p = k3.cross(Vector3::UnitY());
  s.t3 = rotate_onto(k3, p, r3 * p);
  return s;
}

/// Which of the two spherical solutions a configuration lies on.
inline bool spherical_flip(const Vector3& k1, const Vector3& k2, const Vector3& k3, double t2) {
  const Vector3 c = axis_rotation<double>(k2, t2) * k3;
  return c.dot(detail::branch_normal(k1, k2)) < 0.0;
}

}  // namespace bimanifold::subproblem
