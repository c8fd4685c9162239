#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bimanifold/manifold/constraint.hpp"
#include "bimanifold/worldsim/episode.hpp"

namespace bimanifold {

struct CurvatureSample {
  int t_index = 0;
  double kretschmann = 0.0;
  double residual_norm = 0.0;
  double sigma_min = 0.0;
  double cond_j = 0.0;
};

struct CurvatureGap {
  int t_index = 0;
  double sigma_min = 0.0;
  double cond_j = 0.0;
};

struct CurvatureSeries {
  int anchor_t = 0;
  std::vector<CurvatureSample> samples;
  std::vector<CurvatureGap> gaps;  // rank-deficient knots
};

/// Step whose commanded configuration anchors the constraint: the knot at
/// which the box was first grasped, else the first locked knot.
inline std::size_t grasp_anchor(const Episode& ep) {
  if (ep.events) {
    for (const Event& e : *ep.events) {
      if (e.kind == EventKind::GraspAttach) {
        for (std::size_t i = 0; i < ep.steps.size(); ++i) {
          if (ep.steps[i].t_index == e.t_index) return i;
        }
      }
    }
  }
  for (std::size_t i = 0; i < ep.steps.size(); ++i) {
    if (ep.steps[i].lock_active) return i;
  }
  throw Error(ErrorCode::NoTransportPhase, "episode never grasps or locks");
}

/// Kretschmann scalar of the level set through each commanded transport
/// knot, for the relative-transform constraint anchored at the grasp.
inline CurvatureSeries rollout_curvature_series(std::shared_ptr<const BimanualModel> model, const Episode& ep,
                                                const CurvatureOptions& opt = {}) {
  const std::vector<std::size_t> transport = ep.steps_in_phase(Phase::Transport);
  if (transport.empty()) throw Error(ErrorCode::NoTransportPhase, "episode has no transport knots");
  CurvatureSeries out;
  const std::size_t anchor = grasp_anchor(ep);
  out.anchor_t = ep.steps[anchor].t_index;
  const Eigen::VectorXd q0 = ep.steps[anchor].action.head<2 * kArmDof>();
  const ConstraintFunction f = make_constraint(std::move(model), q0);
  for (std::size_t i : transport) {
    const EpisodeStep& s = ep.steps[i];
    const Eigen::VectorXd q = s.action.head<2 * kArmDof>();
    try {
      const CurvatureResult r = riemann_and_kretschmann(f, q, opt);
      out.samples.push_back({s.t_index, r.kretschmann, r.residual_norm, r.sigma_min, r.cond_j});
    } catch (const RankDeficientError& e) {
      out.gaps.push_back({s.t_index, e.sigma_min(), jacobian_condition(f, q, opt)});
    }
  }
  return out;
}

}  // namespace bimanifold
