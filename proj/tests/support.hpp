#pragma once

// Shared generators and independent oracles for the test suites.

#include <random>

#include <Eigen/Geometry>

#include "bimanifold/bimanual/bimanual.hpp"

namespace testing_support {

using namespace bimanifold;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vector3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vector3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

/// Rotation with angle drawn uniformly in [0, max_angle].
inline Matrix3 random_rotation(std::mt19937_64& rng, double max_angle = 3.0) {
  return Eigen::AngleAxisd(uniform(rng, 0.0, max_angle), random_unit(rng)).toRotationMatrix();
}

inline Pose random_pose(std::mt19937_64& rng) {
  Pose p;
  p.rotation = random_rotation(rng);
  p.translation = Vector3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  return p;
}

/// In-limit configuration kept away from the shoulder, elbow and wrist
/// singularities (|sin q2|, |sin q4|, |sin q6| >= margin).
inline JointConfig random_config(std::mt19937_64& rng, const ArmModel& m, double margin = 0.05) {
  for (;;) {
    JointConfig q;
    for (int i = 0; i < kArmDof; ++i) q(i) = uniform(rng, m.limit(i).lo, m.limit(i).hi);
    if (std::abs(std::sin(q(1))) >= margin && std::abs(std::sin(q(3))) >= margin &&
        std::abs(std::sin(q(5))) >= margin) {
      return q;
    }
  }
}

/// Straight-line homogeneous-matrix forward kinematics built directly from
/// the description with Eigen's angle-axis type.
inline Eigen::Matrix4d oracle_fk(const ArmDescription& d, const JointConfig& q) {
  auto homogeneous = [](const Pose& p) {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() = p.rotation;
    t.topRightCorner<3, 1>() = p.translation;
    return t;
  };
  Eigen::Matrix4d t = homogeneous(d.base_pose) * homogeneous(d.joint_offsets[0]);
  for (int i = 0; i < kArmDof; ++i) {
    Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
    r.topLeftCorner<3, 3>() = Eigen::AngleAxisd(q(i), d.joint_axes[static_cast<std::size_t>(i)]).toRotationMatrix();
    t = t * r * homogeneous(d.joint_offsets[static_cast<std::size_t>(i) + 1]);
  }
  return t;
}

inline double rotation_angle(const Matrix3& r) {
  return Eigen::AngleAxisd(r).angle();
}

}  // namespace testing_support
