#pragma once

#include <array>

#include "bimanifold/kinematics/arm_model.hpp"

namespace bimanifold {

/// World poses of each joint frame (after its rotation) plus the flange.
template <class T>
struct ChainFrames {
  std::array<PoseT<T>, kArmDof> joints;
  PoseT<T> flange;
};

template <class T>
ChainFrames<T> chain_frames(const ArmModel& model, const JointVec<T>& q) {
  ChainFrames<T> out;
  PoseT<T> f = (model.base_pose() * model.offset(0)).template cast<T>();
  for (int i = 0; i < kArmDof; ++i) {
    PoseT<T> rot;
    rot.rotation = axis_rotation<T>(model.axis(i), q(i));
    f = f * rot;
    out.joints[static_cast<std::size_t>(i)] = f;
    f = f * model.offset(i + 1).template cast<T>();
  }
  out.flange = f;
  return out;
}

/// Flange pose in the world frame.
template <class T>
PoseT<T> forward_kinematics(const ArmModel& model, const JointVec<T>& q) {
  return chain_frames<T>(model, q).flange;
}

inline Pose forward_kinematics(const ArmModel& model, const JointConfig& q) {
  return forward_kinematics<double>(model, q);
}

/// 6x7 geometric Jacobian at the flange; rows 0-2 linear, 3-5 angular.
inline Eigen::Matrix<double, 6, kArmDof> geometric_jacobian(const ArmModel& model, const JointConfig& q) {
  const ChainFrames<double> frames = chain_frames<double>(model, q);
  Eigen::Matrix<double, 6, kArmDof> jac;
  const Vector3& tip = frames.flange.translation;
  for (int i = 0; i < kArmDof; ++i) {
    const Pose& f = frames.joints[static_cast<std::size_t>(i)];
    const Vector3 z = f.rotation * model.axis(i);
    jac.block<3, 1>(0, i) = z.cross(tip - f.translation);
    jac.block<3, 1>(3, i) = z;
  }
  return jac;
}

struct SewPoints {
  Vector3 shoulder;
  Vector3 elbow;
  Vector3 wrist;
};

inline SewPoints sew_points(const ArmModel& model, const JointConfig& q) {
  const ChainFrames<double> frames = chain_frames<double>(model, q);
  const SrsGeometry& g = model.geometry();
  const Pose f4 = frames.joints[2] * model.offset(3);
  return {g.shoulder_world, f4 * g.elbow_in_f4, frames.flange * g.wrist_in_flange};
}

}  // namespace bimanifold
