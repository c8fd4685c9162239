#pragma once

// task_world_v1 documents. Every field is optional; omitted fields keep
// their defaults. Unknown keys are rejected so typos do not pass silently.
//
// {
//   "schema": "task_world_v1",
//   "box_dims": [0.30, 0.15, 0.15],
//   "table_height": 0.0,
//   "shelf_pose": {"translation": [0, 0.7, 0.25], "rpy_deg": [0, 0, 0]},
//   "shelf_half_extents": [0.05, 0.05, 0.03],
//   "thresholds": {"grasp_eps_pos": 0.01, "grasp_eps_rot_deg": 5,
//                  "retain_pos": 0.015, "retain_rot_deg": 5},
//   "single_grip_slip_rate_deg_per_s": 2,
//   "grasp_standoff": 0.02, "grasp_tilt_deg": 0, "grip_closed": 0.5,
//   "control_arm": "right", "dt": 0.1, "substeps": 5,
//   "lock_tolerances": {"position": 1e-9, "rotation": 1e-8},
//   "script": {...}
// }

#include <set>

#include "bimanifold/kinematics/model_io.hpp"
#include "bimanifold/worldsim/task_world.hpp"

namespace bimanifold {

namespace io {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw Error(ErrorCode::ConfigError, where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_deg(const json& j, const char* key, double& out) {
  if (j.contains(key)) out = j.at(key).get<double>() * std::numbers::pi / 180.0;
}

inline IkBranch branch_from(const json& j) {
  IkBranch b;
  reject_unknown(j, {"shoulder_flip", "elbow_flip", "wrist_flip"}, "branch");
  read_opt(j, "shoulder_flip", b.shoulder_flip);
  read_opt(j, "elbow_flip", b.elbow_flip);
  read_opt(j, "wrist_flip", b.wrist_flip);
  return b;
}

inline json branch_to(const IkBranch& b) {
  return {{"shoulder_flip", b.shoulder_flip}, {"elbow_flip", b.elbow_flip}, {"wrist_flip", b.wrist_flip}};
}

}  // namespace io

inline TaskConfig task_config_from_json(const nlohmann::json& j) {
  using namespace io;
  expect_schema(j, kTaskWorldSchema, "task world");
  TaskConfig c;
  try {
    reject_unknown(j,
                   {"schema", "box_dims", "table_height", "shelf_pose", "shelf_half_extents", "thresholds",
                    "single_grip_slip_rate_deg_per_s", "grasp_standoff", "grasp_tilt_deg", "grip_closed",
                    "control_arm", "dt", "substeps", "lock_tolerances", "script"},
                   "task world");
    if (j.contains("box_dims")) c.box_dims = vec3_from(j.at("box_dims"), "box_dims");
    read_opt(j, "table_height", c.table_height);
    if (j.contains("shelf_pose")) c.shelf_pose = pose_from(j.at("shelf_pose"), "shelf_pose");
    if (j.contains("shelf_half_extents")) {
      c.shelf_half_extents = vec3_from(j.at("shelf_half_extents"), "shelf_half_extents");
    }
    if (j.contains("thresholds")) {
      const json& t = j.at("thresholds");
      reject_unknown(t, {"grasp_eps_pos", "grasp_eps_rot_deg", "retain_pos", "retain_rot_deg"}, "thresholds");
      read_opt(t, "grasp_eps_pos", c.thresholds.grasp_eps_pos);
      read_deg(t, "grasp_eps_rot_deg", c.thresholds.grasp_eps_rot);
      read_opt(t, "retain_pos", c.thresholds.retain_pos);
      read_deg(t, "retain_rot_deg", c.thresholds.retain_rot);
    }
    read_deg(j, "single_grip_slip_rate_deg_per_s", c.single_grip_slip_rate);
    read_opt(j, "grasp_standoff", c.grasp_standoff);
    read_deg(j, "grasp_tilt_deg", c.grasp_tilt);
    read_opt(j, "grip_closed", c.grip_closed);
    if (j.contains("control_arm")) c.control_arm = arm_side_from_string(j.at("control_arm").get<std::string>());
    read_opt(j, "dt", c.dt);
    read_opt(j, "substeps", c.substeps);
    if (j.contains("lock_tolerances")) {
      const json& t = j.at("lock_tolerances");
      reject_unknown(t, {"position", "rotation"}, "lock_tolerances");
      read_opt(t, "position", c.lock_tolerances.position);
      read_opt(t, "rotation", c.lock_tolerances.rotation);
    }
    if (j.contains("script")) {
      const json& s = j.at("script");
      ScriptConfig& sc = c.script;
      reject_unknown(s,
                     {"approach_knots", "descend_knots", "close_knots", "lift_knots", "move_knots", "insert_knots",
                      "open_knots", "retreat_knots", "timing_jitter", "home_raise", "pregrasp_raise",
                      "pregrasp_backoff", "lift_height", "preplace_offset", "retreat_backoff", "retreat_raise",
                      "auto_psi", "psi_grid_step_deg", "psi_left_deg", "psi_right_deg", "branch_left",
                      "branch_right"},
                     "script");
      read_opt(s, "approach_knots", sc.approach_knots);
      read_opt(s, "descend_knots", sc.descend_knots);
      read_opt(s, "close_knots", sc.close_knots);
      read_opt(s, "lift_knots", sc.lift_knots);
      read_opt(s, "move_knots", sc.move_knots);
      read_opt(s, "insert_knots", sc.insert_knots);
      read_opt(s, "open_knots", sc.open_knots);
      read_opt(s, "retreat_knots", sc.retreat_knots);
      read_opt(s, "timing_jitter", sc.timing_jitter);
      read_opt(s, "home_raise", sc.home_raise);
      read_opt(s, "pregrasp_raise", sc.pregrasp_raise);
      read_opt(s, "pregrasp_backoff", sc.pregrasp_backoff);
      read_opt(s, "lift_height", sc.lift_height);
      if (s.contains("preplace_offset")) sc.preplace_offset = vec3_from(s.at("preplace_offset"), "preplace_offset");
      read_opt(s, "retreat_backoff", sc.retreat_backoff);
      read_opt(s, "retreat_raise", sc.retreat_raise);
      read_opt(s, "auto_psi", sc.auto_psi);
      read_deg(s, "psi_grid_step_deg", sc.psi_grid_step);
      read_deg(s, "psi_left_deg", sc.psi_left);
      read_deg(s, "psi_right_deg", sc.psi_right);
      if (s.contains("branch_left")) sc.branch_left = branch_from(s.at("branch_left"));
      if (s.contains("branch_right")) sc.branch_right = branch_from(s.at("branch_right"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("task world: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json task_config_to_json(const TaskConfig& c) {
  using namespace io;
  constexpr double deg = 180.0 / std::numbers::pi;
  const ScriptConfig& sc = c.script;
  return {
      {"schema", kTaskWorldSchema},
      {"box_dims", vec3_to(c.box_dims)},
      {"table_height", c.table_height},
      {"shelf_pose", pose_to(c.shelf_pose)},
      {"shelf_half_extents", vec3_to(c.shelf_half_extents)},
      {"thresholds",
       {{"grasp_eps_pos", c.thresholds.grasp_eps_pos},
        {"grasp_eps_rot_deg", c.thresholds.grasp_eps_rot * deg},
        {"retain_pos", c.thresholds.retain_pos},
        {"retain_rot_deg", c.thresholds.retain_rot * deg}}},
      {"single_grip_slip_rate_deg_per_s", c.single_grip_slip_rate * deg},
      {"grasp_standoff", c.grasp_standoff},
      {"grasp_tilt_deg", c.grasp_tilt * deg},
      {"grip_closed", c.grip_closed},
      {"control_arm", to_string(c.control_arm)},
      {"dt", c.dt},
      {"substeps", c.substeps},
      {"lock_tolerances", {{"position", c.lock_tolerances.position}, {"rotation", c.lock_tolerances.rotation}}},
      {"script",
       {{"approach_knots", sc.approach_knots},
        {"descend_knots", sc.descend_knots},
        {"close_knots", sc.close_knots},
        {"lift_knots", sc.lift_knots},
        {"move_knots", sc.move_knots},
        {"insert_knots", sc.insert_knots},
        {"open_knots", sc.open_knots},
        {"retreat_knots", sc.retreat_knots},
        {"timing_jitter", sc.timing_jitter},
        {"home_raise", sc.home_raise},
        {"pregrasp_raise", sc.pregrasp_raise},
        {"pregrasp_backoff", sc.pregrasp_backoff},
        {"lift_height", sc.lift_height},
        {"preplace_offset", vec3_to(sc.preplace_offset)},
        {"retreat_backoff", sc.retreat_backoff},
        {"retreat_raise", sc.retreat_raise},
        {"auto_psi", sc.auto_psi},
        {"psi_grid_step_deg", sc.psi_grid_step * deg},
        {"psi_left_deg", sc.psi_left * deg},
        {"psi_right_deg", sc.psi_right * deg},
        {"branch_left", branch_to(sc.branch_left)},
        {"branch_right", branch_to(sc.branch_right)}}}};
}

inline TaskConfig load_task_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "task world file '" + path.string() + "' does not exist");
  }
  try {
    return task_config_from_json(io::read_json_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace bimanifold
