#pragma once

// arm_model_v1 documents. Lengths in meters, angles in degrees.
//
// {
//   "schema": "arm_model_v1",
//   "name": "iiwa14_left",
//   "structure_tag": "S-R-S",
//   "base_pose": {"translation": [x, y, z], "rpy_deg": [r, p, y]},
//   "joint_offsets": [ 8 poses ],
//   "joint_axes": [ 7 x [x, y, z] ],
//   "joint_limits_deg": [ 7 x [lo, hi] ],
//   "sew": {"pole": [x, y, z], "reference": [x, y, z]}
// }

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bimanifold/kinematics/arm_model.hpp"

namespace bimanifold {

inline constexpr const char* kArmModelSchema = "arm_model_v1";

namespace io {

using nlohmann::json;

inline Vector3 vec3_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ConfigError, what + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Pose pose_from(const json& j, const std::string& what) {
  constexpr double deg = std::numbers::pi / 180.0;
  const Vector3 t = j.contains("translation") ? vec3_from(j.at("translation"), what + ".translation") : Vector3::Zero();
  const Vector3 rpy = j.contains("rpy_deg") ? vec3_from(j.at("rpy_deg"), what + ".rpy_deg") : Vector3::Zero();
  return make_pose(Rotation::from_rpy(rpy.x() * deg, rpy.y() * deg, rpy.z() * deg), t);
}

inline json pose_to(const Pose& p) {
  constexpr double deg = std::numbers::pi / 180.0;
  return json{{"translation", vec3_to(p.translation)}, {"rpy_deg", vec3_to(rpy_from_matrix(p.rotation) / deg)}};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

inline void expect_schema(const json& j, const std::string& schema, const std::string& where) {
  const std::string got = j.value("schema", std::string{});
  if (got != schema) {
    throw Error(ErrorCode::SchemaMismatch, where + ": expected schema '" + schema + "', found '" + got + "'");
  }
}

}  // namespace io

inline ArmModel arm_model_from_json(const nlohmann::json& j) {
  using namespace io;
  constexpr double deg = std::numbers::pi / 180.0;
  expect_schema(j, kArmModelSchema, "arm model");
  try {
    ArmDescription d;
    d.name = j.at("name").get<std::string>();
    d.structure_tag = j.value("structure_tag", std::string("S-R-S"));
    d.base_pose = pose_from(j.at("base_pose"), "base_pose");
    const json& offs = j.at("joint_offsets");
    const json& axes = j.at("joint_axes");
    const json& lims = j.at("joint_limits_deg");
    if (offs.size() != kArmDof + 1 || axes.size() != kArmDof || lims.size() != kArmDof) {
      throw Error(ErrorCode::ConfigError, "arm model needs 8 offsets, 7 axes and 7 limits");
    }
    for (std::size_t i = 0; i < offs.size(); ++i) d.joint_offsets[i] = pose_from(offs[i], "joint_offsets");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      d.joint_axes[i] = vec3_from(axes[i], "joint_axes");
      const double n = d.joint_axes[i].norm();
      // Files carry decimal axes; snap those that are unit to print precision.
      if (std::abs(n - 1.0) < 1e-9) d.joint_axes[i] /= n;
      d.joint_limits[i] = {lims[i].at(0).get<double>() * deg, lims[i].at(1).get<double>() * deg};
    }
    if (j.contains("sew")) {
      d.sew.pole = vec3_from(j.at("sew").at("pole"), "sew.pole");
      d.sew.reference = vec3_from(j.at("sew").at("reference"), "sew.reference");
    }
    return ArmModel(std::move(d));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("arm model: ") + e.what());
  }
}

inline nlohmann::json arm_model_to_json(const ArmModel& model) {
  using namespace io;
  constexpr double deg = std::numbers::pi / 180.0;
  const ArmDescription& d = model.description();
  json j;
  j["schema"] = kArmModelSchema;
  j["name"] = d.name;
  j["structure_tag"] = d.structure_tag;
  j["base_pose"] = pose_to(d.base_pose);
  j["joint_offsets"] = json::array();
  for (const Pose& p : d.joint_offsets) j["joint_offsets"].push_back(pose_to(p));
  j["joint_axes"] = json::array();
  j["joint_limits_deg"] = json::array();
  for (std::size_t i = 0; i < kArmDof; ++i) {
    j["joint_axes"].push_back(vec3_to(d.joint_axes[i]));
    j["joint_limits_deg"].push_back(json::array({d.joint_limits[i].lo / deg, d.joint_limits[i].hi / deg}));
  }
  j["sew"] = json{{"pole", vec3_to(d.sew.pole)}, {"reference", vec3_to(d.sew.reference)}};
  return j;
}

inline ArmModel load_arm_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "arm model file '" + path.string() + "' does not exist");
  }
  try {
    return arm_model_from_json(io::read_json_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace bimanifold
