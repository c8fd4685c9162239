#pragma once

#include <memory>

#include "bimanifold/bimanual/bimanual.hpp"
#include "bimanifold/manifold/curvature.hpp"

namespace bimanifold {

enum class ResidualForm {
  /// log(R_ref^T R(q)); zero at the reference.
  FixedReference,
  /// log(R(q) R_ref^T); same zero set, different chart.
  LeftResidual,
};

/// e: R^14 -> R^6, the relative-transform residual with respect to the
/// relative pose captured at q0. q stacks [q_left; q_right].
class ConstraintFunction {
 public:
  ConstraintFunction(std::shared_ptr<const BimanualModel> model, Pose reference_rel,
                     ResidualForm form = ResidualForm::FixedReference)
      : model_(std::move(model)), reference_(std::move(reference_rel)), form_(form) {}

  const BimanualModel& model() const { return *model_; }
  const Pose& reference_rel() const { return reference_; }
  ResidualForm form() const { return form_; }

  static constexpr Eigen::Index input_dim() { return 2 * kArmDof; }
  static constexpr Eigen::Index output_dim() { return 6; }

  template <class T>
  VecX<T> operator()(const VecX<T>& q) const {
    if (q.size() != input_dim()) throw Error(ErrorCode::InvalidArgument, "constraint expects 14 joint values");
    const JointVec<T> ql = q.template head<kArmDof>();
    const JointVec<T> qr = q.template tail<kArmDof>();
    const PoseT<T> rel = relative_transform<T>(*model_, ql, qr);
    const Mat3<T> r_ref = reference_.rotation.template cast<T>();
    const Mat3<T> dr = form_ == ResidualForm::FixedReference ? Mat3<T>(r_ref.transpose() * rel.rotation)
                                                              : Mat3<T>(rel.rotation * r_ref.transpose());
    VecX<T> e(6);
    e.template head<3>() = rel.translation - reference_.translation.template cast<T>();
    e.template tail<3>() = so3_log<T>(dr);
    return e;
  }

 private:
  std::shared_ptr<const BimanualModel> model_;
  Pose reference_;
  ResidualForm form_;
};

inline Eigen::VectorXd stack(const JointConfig& left, const JointConfig& right) {
  Eigen::VectorXd q(2 * kArmDof);
  q << left, right;
  return q;
}

/// Constraint anchored at the relative transform of configuration q0.
inline ConstraintFunction make_constraint(std::shared_ptr<const BimanualModel> model, const Eigen::VectorXd& q0,
                                          ResidualForm form = ResidualForm::FixedReference) {
  if (q0.size() != 2 * kArmDof) throw Error(ErrorCode::InvalidArgument, "q0 must have 14 entries");
  const Pose rel = relative_transform<double>(*model, JointConfig(q0.head<kArmDof>()), JointConfig(q0.tail<kArmDof>()));
  return ConstraintFunction(std::move(model), rel, form);
}

}  // namespace bimanifold
