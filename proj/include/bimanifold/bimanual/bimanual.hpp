#pragma once

// Two-arm state, the relative gripper transform, and the transform-locking
// controller: one arm is driven directly, the other tracks it through IK so
// the gripper-to-gripper pose stays where it was when the lock engaged.

#include <string>

#include "bimanifold/kinematics/inverse.hpp"

namespace bimanifold {

enum class ArmSide { Left, Right };

inline const char* to_string(ArmSide s) { return s == ArmSide::Left ? "left" : "right"; }
inline ArmSide other(ArmSide s) { return s == ArmSide::Left ? ArmSide::Right : ArmSide::Left; }
inline ArmSide arm_side_from_string(const std::string& s) {
  if (s == "left") return ArmSide::Left;
  if (s == "right") return ArmSide::Right;
  throw Error(ErrorCode::ConfigError, "arm side must be 'left' or 'right', got '" + s + "'");
}

struct BimanualModel {
  ArmModel left;
  ArmModel right;

  BimanualModel(ArmModel l, ArmModel r) : left(std::move(l)), right(std::move(r)) {
    if (pose_distance(left.base_pose(), right.base_pose()).position < 1e-9 &&
        pose_distance(left.base_pose(), right.base_pose()).rotation < 1e-9) {
      throw Error(ErrorCode::InvalidModel, "left and right arms share a base pose");
    }
  }

  const ArmModel& arm(ArmSide s) const { return s == ArmSide::Left ? left : right; }

  /// Two default arms 0.8 m apart along world x, both facing +y.
  static BimanualModel default_pair(double separation = 0.8) {
    return {ArmModel(ArmModel::default_description(make_translation({-separation / 2, 0, 0}), "iiwa14_left")),
            ArmModel(ArmModel::default_description(make_translation({separation / 2, 0, 0}), "iiwa14_right"))};
  }
};

struct BimanualState {
  JointConfig q_left = JointConfig::Zero();
  JointConfig q_right = JointConfig::Zero();
  double grip_left = 0.0;  // 0 open, 1 closed
  double grip_right = 0.0;

  const JointConfig& q(ArmSide s) const { return s == ArmSide::Left ? q_left : q_right; }
  JointConfig& q(ArmSide s) { return s == ArmSide::Left ? q_left : q_right; }
  double grip(ArmSide s) const { return s == ArmSide::Left ? grip_left : grip_right; }

  void validate() const {
    if (grip_left < 0.0 || grip_left > 1.0 || grip_right < 0.0 || grip_right > 1.0) {
      throw Error(ErrorCode::InvalidArgument, "gripper commands must lie in [0, 1]");
    }
  }

  Eigen::Matrix<double, 14, 1> stacked() const {
    Eigen::Matrix<double, 14, 1> q;
    q << q_left, q_right;
    return q;
  }
};

/// Left gripper pose expressed in the right gripper frame.
template <class T>
PoseT<T> relative_transform(const BimanualModel& model, const JointVec<T>& q_left, const JointVec<T>& q_right) {
  return forward_kinematics<T>(model.right, q_right).inverse() * forward_kinematics<T>(model.left, q_left);
}

inline Pose relative_transform(const BimanualModel& model, const BimanualState& s) {
  return relative_transform<double>(model, s.q_left, s.q_right);
}

struct LockTolerances {
  double position = 1e-9;  // meters
  double rotation = 1e-8;  // radians
};

/// Snapshot of the subordinate gripper pose in the control gripper frame.
struct TransformLock {
  ArmSide control_arm = ArmSide::Right;
  Pose locked_rel;
  LockTolerances tolerances;

  ArmSide subordinate_arm() const { return other(control_arm); }
};

/// Subordinate gripper in the control gripper frame.
inline Pose relative_in_control_frame(const BimanualModel& model, const BimanualState& s, ArmSide control) {
  const Pose rel = relative_transform(model, s);  // left in right
  return control == ArmSide::Right ? rel : rel.inverse();
}

inline TransformLock engage_lock(const BimanualModel& model, const BimanualState& s, ArmSide control_arm,
                                 const LockTolerances& tol = {}) {
  if (!(tol.position > 0.0) || !(tol.rotation > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lock tolerances must be positive");
  }
  return {control_arm, relative_in_control_frame(model, s, control_arm), tol};
}

struct PreservationCheck {
  double pos_err = 0.0;
  double rot_err = 0.0;
  bool ok = true;
};

inline PreservationCheck check_preservation(const BimanualModel& model, const BimanualState& s,
                                            const TransformLock& lock) {
  const PoseError e = pose_distance(relative_in_control_frame(model, s, lock.control_arm), lock.locked_rel);
  return {e.position, e.rotation, e.position <= lock.tolerances.position && e.rotation <= lock.tolerances.rotation};
}

struct SubordinateCommand {
  JointConfig q;
  bool held = false;
};

/// One step of the locked controller. If IK fails or the achieved relative
/// transform misses the lock, the previous configuration is held unchanged.
inline SubordinateCommand subordinate_command(const BimanualModel& model, const TransformLock& lock,
                                              const Pose& control_pose, double psi_sub, const IkBranch& branch,
                                              const JointConfig& prev_sub) {
  const ArmSide sub = lock.subordinate_arm();
  const ArmModel& arm = model.arm(sub);
  const Pose target = control_pose * lock.locked_rel;
  JointConfig q;
  try {
    q = inverse_kinematics(arm, target, psi_sub, branch, true);
  } catch (const Error&) {
    return {prev_sub, true};
  }
  const PoseT<double> achieved = control_pose.inverse() * forward_kinematics(arm, q);
  const PoseError e = pose_distance(achieved, lock.locked_rel);
  if (e.position > lock.tolerances.position || e.rotation > lock.tolerances.rotation) return {prev_sub, true};
  return {q, false};
}

}  // namespace bimanifold
