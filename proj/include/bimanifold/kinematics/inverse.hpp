#pragma once

// Shoulder-elbow-wrist redundancy angle and closed-form inverse kinematics
// for S-R-S arms.
//
// The SEW angle measures the elbow position on its self-motion circle
// around the shoulder-wrist line. The zero direction on that circle comes
// from a stereographic construction: for a unit shoulder-to-wrist direction
// w, the reference is the tangent at w of the circle through the pole P and
// w that leaves P along the configured reference vector r. That field is
// smooth on the whole sphere except at w = P, so choosing P away from the
// workspace keeps the parameterization regular where the arm works.

#include <array>
#include <cmath>
#include <vector>

#include "bimanifold/kinematics/forward.hpp"
#include "bimanifold/kinematics/subproblems.hpp"

namespace bimanifold {

struct IkBranch {
  bool shoulder_flip = false;
  bool elbow_flip = false;
  bool wrist_flip = false;

  friend bool operator==(const IkBranch&, const IkBranch&) = default;

  static std::array<IkBranch, 8> all() {
    std::array<IkBranch, 8> out;
    for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = {(i & 1) != 0, (i & 2) != 0, (i & 4) != 0};
    return out;
  }
};

inline constexpr double kElbowSingularMargin = 1e-6;
inline constexpr double kDegenerateSewDistance = 1e-6;

/// Orthonormal (x, y) spanning the plane normal to the unit vector `w`,
/// all in world coordinates.
inline std::pair<Vector3, Vector3> sew_reference_frame(const ArmModel& model, const Vector3& w_world) {
  const Matrix3& rb = model.base_pose().rotation;
  const Vector3 w = rb.transpose() * w_world;
  const Vector3& pole = model.sew().pole;
  const Vector3& ref = model.sew().reference;
  if ((w - pole).norm() < 1e-9) {
    throw Error(ErrorCode::DegenerateSEW, "shoulder-wrist direction at the SEW pole");
  }
  const Vector3 n = ref.cross(w - pole);
  const Vector3 x = w.cross(n).normalized();
  const Vector3 y = w.cross(x);
  return {rb * x, rb * y};
}

namespace detail {

struct IkAxes {
  Matrix3 r_f0;               // base * O0 rotation
  std::array<Vector3, 3> shoulder;  // axes of joints 1-3 in the joint-1 frame
  Matrix3 shoulder_tail;      // R_O1 R_O2
  std::array<Vector3, 3> wrist;     // axes of joints 5-7 in the joint-4 frame after O4
  Matrix3 wrist_tail;         // R_O4 R_O5 R_O6 R_O7
};

inline IkAxes ik_axes(const ArmModel& m) {
  IkAxes ax;
  ax.r_f0 = m.base_pose().rotation * m.offset(0).rotation;
  const Matrix3& o1 = m.offset(1).rotation;
  const Matrix3& o2 = m.offset(2).rotation;
  ax.shoulder = {m.axis(0), o1 * m.axis(1), o1 * o2 * m.axis(2)};
  ax.shoulder_tail = o1 * o2;
  const Matrix3& o4 = m.offset(4).rotation;
  const Matrix3& o5 = m.offset(5).rotation;
  const Matrix3& o6 = m.offset(6).rotation;
  ax.wrist = {o4 * m.axis(4), o4 * o5 * m.axis(5), o4 * o5 * o6 * m.axis(6)};
  ax.wrist_tail = o4 * o5 * o6 * m.offset(7).rotation;
  return ax;
}

// Argument of the elbow subproblem |R(h4, q4) p1 - p2| = |W - S|.
inline Vector3 elbow_p2(const ArmModel& m) {
  const Pose& o3 = m.offset(3);
  return o3.rotation.transpose() * (m.geometry().shoulder_in_a3 - o3.translation);
}

inline double sin_between(const Vector3& a, const Vector3& b) {
  return a.cross(b).norm() / (a.norm() * b.norm());
}

inline Matrix3 frame_from(const Vector3& primary, const Vector3& secondary) {
  const Vector3 x = primary.normalized();
  const Vector3 y = (secondary - secondary.dot(x) * x).normalized();
  Matrix3 f;
  f.col(0) = x;
  f.col(1) = y;
  f.col(2) = x.cross(y);
  return f;
}

}  // namespace detail

/// SEW angle in (-pi, pi].
inline double sew_angle(const ArmModel& model, const JointConfig& q) {
  const SewPoints p = sew_points(model, q);
  const Vector3 sw = p.wrist - p.shoulder;
  if (sw.norm() < kDegenerateSewDistance) {
    throw Error(ErrorCode::DegenerateSEW, "shoulder and wrist coincide");
  }
  const auto [x, y] = sew_reference_frame(model, sw.normalized());
  const Vector3 se = p.elbow - p.shoulder;
  return std::atan2(y.dot(se), x.dot(se));
}

/// Branch flags that reproduce `q` under inverse_kinematics.
inline IkBranch ik_branch(const ArmModel& model, const JointConfig& q) {
  const detail::IkAxes ax = detail::ik_axes(model);
  IkBranch b;
  b.shoulder_flip = subproblem::spherical_flip(ax.shoulder[0], ax.shoulder[1], ax.shoulder[2], q(1));
  b.wrist_flip = subproblem::spherical_flip(ax.wrist[0], ax.wrist[1], ax.wrist[2], q(5));
  const SewPoints p = sew_points(model, q);
  const auto circle = subproblem::rotate_to_distance(model.axis(3), model.geometry().wrist_in_f4,
                                                     detail::elbow_p2(model), (p.wrist - p.shoulder).norm());
  if (circle) b.elbow_flip = subproblem::wrap_angle(q(3) - circle->center) < 0.0;
  return b;
}

/// Closed-form IK with the SEW angle `psi` as the redundancy parameter.
inline JointConfig inverse_kinematics(const ArmModel& model, const Pose& target, double psi, const IkBranch& branch,
                                      bool enforce_limits = true) {
  const SrsGeometry& g = model.geometry();
  const Vector3 wrist = target * g.wrist_in_flange;
  const Vector3 sw = wrist - g.shoulder_world;
  const double reach = sw.norm();
  if (reach < kDegenerateSewDistance) {
    throw Error(ErrorCode::DegenerateSEW, "wrist target at the shoulder");
  }

  // Elbow joint from the shoulder-wrist distance.
  const auto circle = subproblem::rotate_to_distance(model.axis(3), g.wrist_in_f4, detail::elbow_p2(model), reach);
  if (!circle) {
    throw Error(ErrorCode::Unreachable, "wrist target at distance " + std::to_string(reach) + " m is out of reach");
  }
  JointConfig q;
  q(3) = subproblem::wrap_angle(circle->center + (branch.elbow_flip ? -circle->half_width : circle->half_width));

  // Shoulder-wrist and shoulder-elbow vectors in the frame after joint 3.
  const Pose& o3 = model.offset(3);
  const Vector3 w3 = o3 * (axis_rotation<double>(model.axis(3), q(3)) * g.wrist_in_f4);
  const Vector3 d3 = w3 - g.shoulder_in_a3;
  const Vector3 a3 = o3 * g.elbow_in_f4 - g.shoulder_in_a3;
  if (detail::sin_between(a3, d3) < kElbowSingularMargin) {
    throw Error(ErrorCode::ElbowSingular, "shoulder, elbow and wrist are collinear");
  }

  // Elbow placement on the self-motion circle.
  const Vector3 w_hat = sw / reach;
  const auto [x_ref, y_ref] = sew_reference_frame(model, w_hat);
  const double along = a3.dot(d3) / d3.norm();
  const double radius = std::sqrt(std::max(a3.squaredNorm() - along * along, 0.0));
  const Vector3 elbow = along * w_hat + radius * (std::cos(psi) * x_ref + std::sin(psi) * y_ref);

  const Matrix3 r_a3 = detail::frame_from(sw, elbow) * detail::frame_from(d3, a3).transpose();

  const detail::IkAxes ax = detail::ik_axes(model);
  const Matrix3 m_shoulder = ax.r_f0.transpose() * r_a3 * ax.shoulder_tail.transpose();
  const auto sh = subproblem::solve_spherical(ax.shoulder[0], ax.shoulder[1], ax.shoulder[2], m_shoulder,
                                              branch.shoulder_flip);
  if (!sh) throw Error(ErrorCode::Unreachable, "shoulder orientation not attainable");
  q(0) = subproblem::wrap_angle(sh->t1);
  q(1) = subproblem::wrap_angle(sh->t2);
  q(2) = subproblem::wrap_angle(sh->t3);

  const Matrix3 r_f4 = r_a3 * o3.rotation * axis_rotation<double>(model.axis(3), q(3));
  const Matrix3 m_wrist = r_f4.transpose() * target.rotation * ax.wrist_tail.transpose();
  const auto wr = subproblem::solve_spherical(ax.wrist[0], ax.wrist[1], ax.wrist[2], m_wrist, branch.wrist_flip);
  if (!wr) throw Error(ErrorCode::Unreachable, "wrist orientation not attainable");
  q(4) = subproblem::wrap_angle(wr->t1);
  q(5) = subproblem::wrap_angle(wr->t2);
  q(6) = subproblem::wrap_angle(wr->t3);

  if (enforce_limits) {
    std::vector<int> bad;
    for (int i = 0; i < kArmDof; ++i) {
      if (q(i) < model.limit(i).lo || q(i) > model.limit(i).hi) bad.push_back(i);
    }
    if (!bad.empty()) {
      std::string list;
      for (int i : bad) list += (list.empty() ? "" : ",") + std::to_string(i + 1);
      throw JointLimitError(bad, "joints " + list + " outside limits");
    }
  }
  return q;
}

/// All eight branch solutions; branches that fail are skipped.
inline std::vector<std::pair<IkBranch, JointConfig>> inverse_kinematics_all(const ArmModel& model, const Pose& target,
                                                                            double psi, bool enforce_limits = false) {
  std::vector<std::pair<IkBranch, JointConfig>> out;
  for (const IkBranch& b : IkBranch::all()) {
    try {
      out.emplace_back(b, inverse_kinematics(model, target, psi, b, enforce_limits));
    } catch (const Error&) {
    }
  }
  return out;
}

}  // namespace bimanifold
