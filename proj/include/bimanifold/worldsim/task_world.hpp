#pragma once

// Rule-based kinematic world: a box on a table, a shelf, and two grippers.
// There is no contact physics. Grasping, slipping, dropping and placing are
// decided by pose tolerances on the commanded gripper poses.

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "bimanifold/worldsim/episode.hpp"

namespace bimanifold {

inline constexpr const char* kTaskWorldSchema = "task_world_v1";

struct WorldThresholds {
  double grasp_eps_pos = 0.01;                       // m
  double grasp_eps_rot = 5.0 * std::numbers::pi / 180;  // rad
  double retain_pos = 0.015;                         // m
  double retain_rot = 5.0 * std::numbers::pi / 180;  // rad

  void validate() const {
    if (!(grasp_eps_pos > 0) || !(grasp_eps_rot > 0) || !(retain_pos > 0) || !(retain_rot > 0)) {
      throw Error(ErrorCode::ConfigError, "world thresholds must be positive");
    }
  }
};

/// Timing and geometry of the scripted demonstration, in knots and meters.
struct ScriptConfig {
  int approach_knots = 15;
  int descend_knots = 10;
  int close_knots = 8;
  int lift_knots = 12;
  int move_knots = 25;
  int insert_knots = 12;
  int open_knots = 8;
  int retreat_knots = 12;
  double timing_jitter = 0.10;  // relative, uniform per segment

  double home_raise = 0.10;        // above the pregrasp pose
  double pregrasp_raise = 0.10;    // above the grasp pose
  double pregrasp_backoff = 0.05;  // outward along the approach axis
  double lift_height = 0.15;
  Vector3 preplace_offset{0.0, -0.12, 0.03};  // shelf frame
  double retreat_backoff = 0.08;
  double retreat_raise = 0.05;

  /// Arm angles. With auto_psi the generator picks, per episode and arm, the
  /// grid value with the widest joint-limit margin over the script waypoints.
  bool auto_psi = true;
  double psi_grid_step = 5.0 * std::numbers::pi / 180;
  double psi_left = 0.0;
  double psi_right = 0.0;
  IkBranch branch_left;
  IkBranch branch_right;

  void validate() const {
    for (int n : {approach_knots, descend_knots, close_knots, lift_knots, move_knots, insert_knots, open_knots,
                  retreat_knots}) {
      if (n < 1) throw Error(ErrorCode::ConfigError, "script segments need at least one knot");
    }
    if (auto_psi && !(psi_grid_step > 0.0)) throw Error(ErrorCode::ConfigError, "psi grid step must be positive");
    if (timing_jitter < 0.0 || timing_jitter >= 1.0) {
      throw Error(ErrorCode::ConfigError, "timing jitter must lie in [0, 1)");
    }
  }

  double psi(ArmSide s) const { return s == ArmSide::Left ? psi_left : psi_right; }
  const IkBranch& branch(ArmSide s) const { return s == ArmSide::Left ? branch_left : branch_right; }
};

struct TaskConfig {
  Vector3 box_dims{0.30, 0.15, 0.15};
  double table_height = 0.0;
  /// Box pose when correctly placed on the shelf.
  Pose shelf_pose = make_translation({0.0, 0.70, 0.25});
  Vector3 shelf_half_extents{0.05, 0.05, 0.03};
  WorldThresholds thresholds;
  double single_grip_slip_rate = 2.0 * std::numbers::pi / 180;  // rad/s
  double grasp_standoff = 0.02;
  double grasp_tilt = 0.0;  // approach axis pitched down from horizontal, rad
  double grip_closed = 0.5;
  ArmSide control_arm = ArmSide::Right;
  double dt = 0.1;
  int substeps = 5;
  LockTolerances lock_tolerances;
  ScriptConfig script;

  void validate() const {
    thresholds.validate();
    script.validate();
    if ((box_dims.array() <= 0.0).any()) throw Error(ErrorCode::ConfigError, "box dimensions must be positive");
    if ((shelf_half_extents.array() <= 0.0).any()) {
      throw Error(ErrorCode::ConfigError, "shelf region must have positive extent");
    }
    if (!(dt > 0.0) || substeps < 1) throw Error(ErrorCode::ConfigError, "dt must be positive and substeps >= 1");
    if (single_grip_slip_rate < 0.0) throw Error(ErrorCode::ConfigError, "slip rate must be non-negative");
    if (!(grip_closed > 0.0 && grip_closed < 1.0)) throw Error(ErrorCode::ConfigError, "grip threshold in (0, 1)");
  }

  /// Gripper pose in the box frame for an end-face grasp. Gripper z points
  /// into the face (pitched down by grasp_tilt), gripper x runs along box y.
  Pose nominal_grasp(ArmSide side) const {
    const double c = std::cos(grasp_tilt), s = std::sin(grasp_tilt);
    const double sign = side == ArmSide::Left ? 1.0 : -1.0;
    Matrix3 r;
    r.col(2) = Vector3(sign * c, 0, -s);
    r.col(1) = Vector3(sign * s, 0, c);
    r.col(0) = r.col(1).cross(r.col(2));
    const Vector3 face(-sign * box_dims.x() / 2, 0, 0);
    return {r, face - grasp_standoff * r.col(2)};
  }

  Pose box_pose(const BoxInit& b) const {
    return make_pose(Rotation::from_axis_angle(Vector3::UnitZ(), b.theta),
                     {b.x, b.y, table_height + box_dims.z() / 2});
  }

  bool in_shelf_region(const Pose& box) const {
    const Vector3 d = shelf_pose.rotation.transpose() * (box.translation - shelf_pose.translation);
    return (d.cwiseAbs().array() <= shelf_half_extents.array()).all();
  }
};

enum class AttachState { Free, Grasped, Dropped, Placed };

inline const char* to_string(AttachState s) {
  switch (s) {
    case AttachState::Free: return "free";
    case AttachState::Grasped: return "grasped";
    case AttachState::Dropped: return "dropped";
    case AttachState::Placed: return "placed";
  }
  return "?";
}

inline std::size_t side_index(ArmSide s) { return s == ArmSide::Left ? 0 : 1; }

struct TaskWorld {
  std::shared_ptr<const TaskConfig> config;
  Pose box_pose;
  AttachState attach_state = AttachState::Free;
  std::array<bool, 2> attached{false, false};
  std::array<Pose, 2> grasp_rel;  // gripper pose in the box frame at attach
  double slip = 0.0;              // sag angle while held by one gripper
  Vector3 slip_axis = Vector3::UnitX();  // in the holding gripper frame

  static TaskWorld create(std::shared_ptr<const TaskConfig> cfg, const BoxInit& init) {
    cfg->validate();
    TaskWorld w;
    w.box_pose = cfg->box_pose(init);
    w.config = std::move(cfg);
    return w;
  }

  const WorldThresholds& thresholds() const { return config->thresholds; }
  bool holding(ArmSide s) const { return attached[side_index(s)]; }
  int holders() const { return int(attached[0]) + int(attached[1]); }
  bool terminal() const { return attach_state == AttachState::Dropped || attach_state == AttachState::Placed; }
};

struct WorldStepResult {
  TaskWorld world;
  std::vector<Event> events;
};

namespace detail {

inline std::array<Pose, 2> gripper_poses(const BimanualModel& model, const BimanualState& s) {
  return {forward_kinematics(model.left, s.q_left), forward_kinematics(model.right, s.q_right)};
}

/// Axis in the gripper frame about which a box held by that gripper sags.
inline Vector3 sag_axis(const Pose& gripper, const Pose& box) {
  const Vector3 d = box.translation - gripper.translation;
  Vector3 a = d.cross(-Vector3::UnitZ());
  if (a.norm() < 1e-9) return Vector3::UnitX();
  return gripper.rotation.transpose() * a.normalized();
}

}  // namespace detail

/// Advances the world by one substep of length `dt_sub` given the commanded
/// state. Events carry `t_index`.
inline WorldStepResult step_world(const TaskWorld& world, const BimanualModel& model, const BimanualState& prev,
                                  const BimanualState& cmd, int t_index, double dt_sub) {
  WorldStepResult out{world, {}};
  TaskWorld& w = out.world;
  const TaskConfig& cfg = *w.config;
  const WorldThresholds& th = cfg.thresholds;
  auto emit = [&](EventKind k, std::optional<ArmSide> arm = std::nullopt) {
    out.events.push_back({t_index, k, arm});
  };
  if (w.terminal()) return out;

  const std::array<Pose, 2> grip = detail::gripper_poses(model, cmd);
  const std::array<double, 2> g_now{cmd.grip_left, cmd.grip_right};
  const std::array<double, 2> g_prev{prev.grip_left, prev.grip_right};
  constexpr std::array<ArmSide, 2> sides{ArmSide::Left, ArmSide::Right};

  if (w.attach_state == AttachState::Free) {
    bool near = true;
    for (ArmSide s : sides) {
      const PoseError e = pose_distance(grip[side_index(s)], w.box_pose * cfg.nominal_grasp(s));
      near = near && e.position <= th.grasp_eps_pos && e.rotation <= th.grasp_eps_rot;
    }
    const bool closed = g_now[0] >= cfg.grip_closed && g_now[1] >= cfg.grip_closed;
    const bool crossed = g_prev[0] < cfg.grip_closed || g_prev[1] < cfg.grip_closed;
    if (near && closed && crossed) {
      w.attach_state = AttachState::Grasped;
      for (ArmSide s : sides) {
        w.attached[side_index(s)] = true;
        w.grasp_rel[side_index(s)] = w.box_pose.inverse() * grip[side_index(s)];
        emit(EventKind::GraspAttach, s);
      }
    }
    return out;
  }

  // Grasped. Grippers commanded open let go of the box.
  std::vector<ArmSide> opened;
  for (ArmSide s : sides) {
    if (w.holding(s) && g_now[side_index(s)] < cfg.grip_closed) opened.push_back(s);
  }
  if (!opened.empty() && static_cast<int>(opened.size()) == w.holders()) {
    w.attached = {false, false};
    if (cfg.in_shelf_region(w.box_pose)) {
      w.attach_state = AttachState::Placed;
      emit(EventKind::Placed);
    } else {
      w.attach_state = AttachState::Dropped;
      emit(EventKind::BoxDrop);
    }
    return out;
  }
  for (ArmSide s : opened) {
    w.attached[side_index(s)] = false;
    emit(EventKind::GraspDetach, s);
  }

  // The box rides on the leading gripper: the control arm when it holds.
  const ArmSide lead = w.holding(cfg.control_arm) ? cfg.control_arm : other(cfg.control_arm);
  const std::size_t li = side_index(lead);
  const bool single = w.holders() == 1;
  if (single) {
    if (w.slip == 0.0) {
      w.slip_axis = detail::sag_axis(grip[li], w.box_pose);
    }
    w.slip += cfg.single_grip_slip_rate * dt_sub;
  }
  const Pose sag = make_rotation(axis_rotation<double>(w.slip_axis, w.slip));
  w.box_pose = grip[li] * sag * w.grasp_rel[li].inverse();

  if (!single) {
    const ArmSide follower = other(lead);
    const std::size_t fi = side_index(follower);
    const PoseError e = pose_distance(grip[fi], w.box_pose * w.grasp_rel[fi]);
    if (e.position > th.retain_pos || e.rotation > th.retain_rot) {
      w.attached[fi] = false;
      emit(EventKind::GraspDetach, follower);
    }
  } else if (w.slip > th.retain_rot) {
    w.attached[li] = false;
    emit(EventKind::GraspDetach, lead);
  }

  if (w.holders() == 0) {
    w.attach_state = AttachState::Dropped;
    emit(EventKind::BoxDrop);
  }
  return out;
}

}  // namespace bimanifold
