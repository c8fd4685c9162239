#pragma once

#include <array>
#include <cmath>
#include <string>

#include "bimanifold/errors.hpp"
#include "bimanifold/geometry/pose.hpp"

namespace bimanifold {

inline constexpr int kArmDof = 7;

template <class T> using JointVec = Eigen::Matrix<T, kArmDof, 1>;
using JointConfig = JointVec<double>;

struct JointLimit {
  double lo = -std::numbers::pi;
  double hi = std::numbers::pi;
};

/// Reference directions for the shoulder-elbow-wrist angle, expressed in
/// the arm base frame. `pole` is the singular direction of the stereographic
/// construction; `reference` is the zero direction seen from the antipode.
struct SewConvention {
  Vector3 pole = -Vector3::UnitY();
  Vector3 reference = -Vector3::UnitZ();
};

/// Raw kinematic description, as read from a model file.
///
/// The chain is
///   flange = base * O0 * Rot(a1, q1) * O1 * Rot(a2, q2) * ... * Rot(a7, q7) * O7
/// where each Rot turns about a unit axis through the origin of its frame.
struct ArmDescription {
  std::string name;
  Pose base_pose;
  std::array<Pose, kArmDof + 1> joint_offsets;
  std::array<Vector3, kArmDof> joint_axes;
  std::array<JointLimit, kArmDof> joint_limits;
  SewConvention sew;
  std::string structure_tag = "S-R-S";
};

namespace detail {

struct Line {
  Vector3 point;
  Vector3 dir;  // unit
};

// Midpoint of the common perpendicular and the gap between two lines.
inline std::pair<Vector3, double> closest_approach(const Line& a, const Line& b) {
  const Vector3 w0 = a.point - b.point;
  const double ab = a.dir.dot(b.dir);
  const double denom = 1.0 - ab * ab;
  if (denom < 1e-12) {
    throw Error(ErrorCode::InvalidModel, "parallel axes in a spherical joint group");
  }
  const double d = a.dir.dot(w0);
  const double e = b.dir.dot(w0);
  const double s = (ab * e - d) / denom;
  const double t = (e - ab * d) / denom;
  const Vector3 pa = a.point + s * a.dir;
  const Vector3 pb = b.point + t * b.dir;
  return {(pa + pb) / 2.0, (pa - pb).norm()};
}

inline double line_gap(const Line& a, const Line& b) {
  if (1.0 - std::abs(a.dir.dot(b.dir)) < 1e-12) {
    const Vector3 w0 = b.point - a.point;
    return (w0 - a.dir * a.dir.dot(w0)).norm();
  }
  return closest_approach(a, b).second;
}

}  // namespace detail

/// Spherical-revolute-spherical geometry extracted from the chain once.
/// Points are stored in the frames in which they stay fixed for all q.
struct SrsGeometry {
  Vector3 shoulder_world;   // S, fixed
  Vector3 shoulder_in_a3;   // S in the frame after joint 3
  Vector3 elbow_in_f4;      // E on axis 4, in the joint-4 frame
  Vector3 wrist_in_f4;      // W in the frame after joint 4
  Vector3 wrist_in_flange;  // W in the flange frame
  double upper_arm = 0.0;   // |SE|
  double forearm = 0.0;     // |EW|
};

/// Validated, immutable 7-DoF S-R-S arm.
class ArmModel {
 public:
  ArmModel() : ArmModel(default_description()) {}

  explicit ArmModel(ArmDescription desc) : desc_(std::move(desc)) {
    validate();
    geometry_ = extract_geometry();
  }

  const ArmDescription& description() const { return desc_; }
  const std::string& name() const { return desc_.name; }
  const Pose& base_pose() const { return desc_.base_pose; }
  const Pose& offset(int i) const { return desc_.joint_offsets[static_cast<std::size_t>(i)]; }
  const Vector3& axis(int i) const { return desc_.joint_axes[static_cast<std::size_t>(i)]; }
  const JointLimit& limit(int i) const { return desc_.joint_limits[static_cast<std::size_t>(i)]; }
  const SewConvention& sew() const { return desc_.sew; }
  const SrsGeometry& geometry() const { return geometry_; }

  /// Same arm mounted at another base pose.
  ArmModel with_base(const Pose& base) const {
    ArmDescription d = desc_;
    d.base_pose = base;
    return ArmModel(std::move(d));
  }

  bool within_limits(const JointConfig& q, double slack = 0.0) const {
    for (int i = 0; i < kArmDof; ++i) {
      if (q(i) < limit(i).lo - slack || q(i) > limit(i).hi + slack) return false;
    }
    return true;
  }

  /// KUKA iiwa-14-class geometry: shoulder 0.36 m, upper arm 0.42 m,
  /// forearm 0.40 m, flange 0.126 m, axes z/y alternating.
  static ArmDescription default_description(const Pose& base = Pose::identity(),
                                            const std::string& name = "iiwa14") {
    constexpr double deg = std::numbers::pi / 180.0;
    ArmDescription d;
    d.name = name;
    d.base_pose = base;
    for (auto& o : d.joint_offsets) o = Pose::identity();
    d.joint_offsets[0] = make_translation({0, 0, 0.36});
    d.joint_offsets[3] = make_translation({0, 0, 0.42});
    d.joint_offsets[4] = make_translation({0, 0, 0.40});
    d.joint_offsets[7] = make_translation({0, 0, 0.126});
    for (int i = 0; i < kArmDof; ++i) {
      d.joint_axes[static_cast<std::size_t>(i)] = (i % 2 == 0) ? Vector3::UnitZ() : Vector3::UnitY();
      const double lim = (i % 2 == 0 ? 170.0 : 120.0) * deg;
      d.joint_limits[static_cast<std::size_t>(i)] = {-lim, lim};
    }
    return d;
  }

 private:
  void validate() const {
    if (desc_.structure_tag != "S-R-S") {
      throw Error(ErrorCode::InvalidModel, "unsupported structure '" + desc_.structure_tag + "'");
    }
    for (int i = 0; i < kArmDof; ++i) {
      if (std::abs(axis(i).norm() - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidModel, "joint axis " + std::to_string(i + 1) + " is not unit length");
      }
      if (!(limit(i).lo < limit(i).hi)) {
        throw Error(ErrorCode::InvalidModel, "joint " + std::to_string(i + 1) + " has lo >= hi");
      }
    }
    const Vector3& pole = desc_.sew.pole;
    const Vector3& ref = desc_.sew.reference;
    if (std::abs(pole.norm() - 1.0) > 1e-9 || std::abs(ref.norm() - 1.0) > 1e-9 ||
        std::abs(pole.dot(ref)) > 1e-9) {
      throw Error(ErrorCode::InvalidModel, "SEW pole and reference must be orthonormal");
    }
  }

  SrsGeometry extract_geometry() const {
    // Frames at q = 0; frames[i] is the frame of joint i (rotation applied in place).
    std::array<Pose, kArmDof> frames;
    Pose f = desc_.base_pose * offset(0);
    for (int i = 0; i < kArmDof; ++i) {
      frames[static_cast<std::size_t>(i)] = f;
      f = f * offset(i + 1);
    }
    const Pose flange = f;
    auto axis_line = [&](int i) {
      const Pose& fr = frames[static_cast<std::size_t>(i)];
      return detail::Line{fr.translation, fr.rotation * axis(i)};
    };
    constexpr double tol = 1e-9;
    auto check_group = [&](int a, int b, int c, const char* what) {
      if (detail::line_gap(axis_line(a), axis_line(b)) > tol || detail::line_gap(axis_line(a), axis_line(c)) > tol ||
          detail::line_gap(axis_line(b), axis_line(c)) > tol) {
        throw Error(ErrorCode::InvalidModel, std::string(what) + " axes are not concurrent");
      }
      for (auto [i, j] : {std::pair{a, b}, std::pair{b, c}, std::pair{a, c}}) {
        if (1.0 - std::abs(axis_line(i).dir.dot(axis_line(j).dir)) > 1e-9) {
          return detail::closest_approach(axis_line(i), axis_line(j)).first;
        }
      }
      throw Error(ErrorCode::InvalidModel, std::string(what) + " axes are all parallel");
    };
    const Vector3 s = check_group(0, 1, 2, "shoulder");
    const Vector3 w = check_group(4, 5, 6, "wrist");

    const detail::Line a4 = axis_line(3);
    const Vector3 e = a4.point + a4.dir * a4.dir.dot(s - a4.point);

    SrsGeometry g;
    g.shoulder_world = s;
    g.shoulder_in_a3 = frames[2].inverse() * s;
    g.elbow_in_f4 = frames[3].inverse() * e;
    g.wrist_in_f4 = frames[3].inverse() * w;
    g.wrist_in_flange = flange.inverse() * w;
    g.upper_arm = (e - s).norm();
    g.forearm = (w - e).norm();
    if (g.upper_arm < 1e-9 || g.forearm < 1e-9) {
      throw Error(ErrorCode::InvalidModel, "degenerate upper arm or forearm");
    }
    return g;
  }

  ArmDescription desc_;
  SrsGeometry geometry_;
};

}  // namespace bimanifold
