#pragma once

#include "bimanifold/geometry/so3.hpp"

namespace bimanifold {

/// Rigid transform x -> R x + p. The rotation is stored as a raw matrix so
/// the type can carry dual-number scalars through kinematics code.
template <class T>
struct PoseT {
  Mat3<T> rotation = Mat3<T>::Identity();
  Vec3<T> translation = Vec3<T>::Zero();

  static PoseT identity() { return PoseT{}; }

  PoseT inverse() const {
    PoseT out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  Vec3<T> operator*(const Vec3<T>& x) const { return rotation * x + translation; }

  friend PoseT operator*(const PoseT& a, const PoseT& b) {
    PoseT out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
  }

  template <class U>
  PoseT<U> cast() const {
    PoseT<U> out;
    out.rotation = rotation.template cast<U>();
    out.translation = translation.template cast<U>();
    return out;
  }
};

using Pose = PoseT<double>;

inline Pose make_pose(const Rotation& r, const Vector3& p) {
  Pose out;
  out.rotation = r.matrix();
  out.translation = p;
  return out;
}

inline Pose make_translation(const Vector3& p) {
  Pose out;
  out.translation = p;
  return out;
}

inline Pose make_rotation(const Matrix3& r) {
  Pose out;
  out.rotation = r;
  return out;
}

/// Decoupled 6-vector coordinates [translation; axis-angle]. Not a screw
/// motion: translation and rotation are logged independently.
template <class T>
Vec6<T> pose_log(const PoseT<T>& p) {
  Vec6<T> out;
  out.template head<3>() = p.translation;
  out.template tail<3>() = so3_log<T>(p.rotation);
  return out;
}

template <class T>
PoseT<T> pose_exp(const Vec6<T>& xi) {
  PoseT<T> out;
  out.translation = xi.template head<3>();
  out.rotation = so3_exp<T>(Vec3<T>(xi.template tail<3>()));
  return out;
}

struct PoseError {
  double position = 0.0;  // meters
  double rotation = 0.0;  // radians
};

/// Translation distance and rotation geodesic distance between two poses.
inline PoseError pose_distance(const Pose& a, const Pose& b) {
  return {(a.translation - b.translation).norm(), geodesic_distance(a.rotation, b.rotation)};
}

/// Geodesic interpolation: translation linear, rotation along the SO(3) geodesic.
inline Pose interpolate(const Pose& a, const Pose& b, double s) {
  Pose out;
  out.translation = (1.0 - s) * a.translation + s * b.translation;
  const Vector3 w = so3_log<double>(Matrix3(a.rotation.transpose() * b.rotation));
  out.rotation = a.rotation * so3_exp<double>(Vector3(s * w));
  return out;
}

}  // namespace bimanifold
