#pragma once

// Ornstein-Uhlenbeck noise on the subordinate gripper commands during
// transport, the knob used to degrade demonstration quality.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "bimanifold/metrics/metrics.hpp"
#include "bimanifold/util/parallel.hpp"
#include "bimanifold/worldsim/generator.hpp"

namespace bimanifold {

/// Rotational volatility relative to translational volatility (rad per m).
/// Sets the mean orientation/position error ratio to 0.71 deg/cm.
inline constexpr double kDefaultRotationScale = 0.71 * 100.0 * std::numbers::pi / 180.0;

struct OuParams {
  double alpha = 0.01;  // 1/step
  double eta = 0.0;     // per-step volatility
  double dt = 1.0;      // steps
  double rotation_scale = 1.0;
  Vector6 z0 = Vector6::Zero();

  void validate() const {
    if (alpha < 0.0 || eta < 0.0 || !(dt > 0.0) || rotation_scale < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "OU parameters need alpha >= 0, eta >= 0, dt > 0");
    }
    if (!(alpha * dt < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha * dt must be < 1");
  }
};

/// Euler-Maruyama path Z_0..Z_{n-1}; coordinates 0-2 translate, 3-5 rotate.
inline std::vector<Vector6> ou_path(const OuParams& p, std::size_t n_steps, std::uint64_t seed) {
  p.validate();
  std::vector<Vector6> z;
  if (n_steps == 0) return z;
  z.reserve(n_steps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rho = 1.0 - p.alpha * p.dt;
  const double sqrt_dt = std::sqrt(p.dt);
  Vector6 vol;
  vol << p.eta, p.eta, p.eta, p.eta * p.rotation_scale, p.eta * p.rotation_scale, p.eta * p.rotation_scale;
  vol *= sqrt_dt;
  z.push_back(p.z0);
  for (std::size_t k = 1; k < n_steps; ++k) {
    Vector6 next;
    for (int c = 0; c < 6; ++c) next(c) = rho * z.back()(c) + vol(c) * normal(rng);
    z.push_back(next);
  }
  return z;
}

/// Per-coordinate variance of Z_k for Z_0 = 0.
inline double ou_variance(const OuParams& p, std::size_t k) {
  const double rho = 1.0 - p.alpha * p.dt;
  const double s2 = p.eta * p.eta * p.dt;
  if (rho == 1.0) return s2 * static_cast<double>(k);
  return s2 * (1.0 - std::pow(rho, 2.0 * static_cast<double>(k))) / (1.0 - rho * rho);
}

struct PerturbationLevel {
  int level = 0;  // 0-3, or -1 for a raw eta
  double eta = 0.0;

  static PerturbationLevel from_level(int level) {
    static constexpr std::array<double, 4> etas{0.0, 0.001, 0.0025, 0.005};
    if (level < 0 || level > 3) throw Error(ErrorCode::InvalidArgument, "perturbation level must be 0-3");
    return {level, etas[static_cast<std::size_t>(level)]};
  }
  static PerturbationLevel from_eta(double eta) {
    if (eta < 0.0) throw Error(ErrorCode::InvalidArgument, "eta must be non-negative");
    return {-1, eta};
  }
};

struct PerturbOptions {
  double alpha = 0.01;
  double rotation_scale = kDefaultRotationScale;
  /// Abort a dataset run when IK failures exceed this share of transport knots.
  double max_failure_rate = 1e-3;
};

/// Right-multiplied perturbation: translation offset in the gripper frame,
/// rotation by the axis-angle of the last three coordinates.
inline Pose apply_perturbation(const Pose& p, const Vector6& z) {
  return {p.rotation * so3_exp<double>(Vector3(z.tail<3>())), p.translation + p.rotation * z.head<3>()};
}

/// Perturbs the subordinate arm's transport commands of one episode. Knots
/// whose perturbed pose has no IK solution stay clean and are counted in
/// metadata.ik_failures.
inline Episode perturb_episode(const BimanualModel& model, const Episode& ep, const PerturbationLevel& level,
                               std::uint64_t seed, const PerturbOptions& opt = {}) {
  if (level.eta == 0.0) return ep;
  const std::vector<std::size_t> transport = ep.steps_in_phase(Phase::Transport);
  if (transport.empty()) throw Error(ErrorCode::NoTransportPhase, "episode has no transport knots to perturb");
  OuParams p;
  p.alpha = opt.alpha;
  p.eta = level.eta;
  p.rotation_scale = opt.rotation_scale;
  const std::vector<Vector6> z = ou_path(p, transport.size(), seed);

  Episode out = ep;
  const ArmSide sub = other(ep.metadata.control_arm);
  const ArmModel& arm = model.arm(sub);
  const Eigen::Index offset = sub == ArmSide::Left ? 0 : kArmDof;
  int failures = 0;
  for (std::size_t k = 0; k < transport.size(); ++k) {
    EpisodeStep& step = out.steps[transport[k]];
    const JointConfig q = step.action.segment<kArmDof>(offset);
    const Pose target = apply_perturbation(forward_kinematics(arm, q), z[k]);
    try {
      step.action.segment<kArmDof>(offset) = inverse_kinematics(arm, target, sew_angle(arm, q), ik_branch(arm, q), true);
    } catch (const Error&) {
      ++failures;
    }
  }
  out.metadata.perturbation_level = level.level;
  out.metadata.eta = level.eta;
  out.metadata.perturbation_seed = seed;
  out.metadata.ik_failures = failures;
  // Events were logged for the clean commands.
  out.events.reset();
  return out;
}

inline constexpr std::uint64_t kPerturbSeedStream = 0x70657274;  // "pert"

/// Perturbs a dataset with per-episode seeds derived from `master_seed`.
inline std::vector<Episode> perturb_dataset(const BimanualModel& model, const std::vector<Episode>& episodes,
                                            const PerturbationLevel& level, std::uint64_t master_seed,
                                            const PerturbOptions& opt = {}, unsigned threads = 1) {
  std::vector<Episode> out(episodes.size());
  parallel_for(episodes.size(), threads, [&](std::size_t i) {
    out[i] = perturb_episode(model, episodes[i], level, derive_seed(master_seed, i, kPerturbSeedStream), opt);
  });
  std::size_t knots = 0, failures = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    knots += episodes[i].steps_in_phase(Phase::Transport).size();
    failures += static_cast<std::size_t>(out[i].metadata.ik_failures);
  }
  if (knots > 0 && static_cast<double>(failures) > opt.max_failure_rate * static_cast<double>(knots)) {
    throw Error(ErrorCode::IkFailureDuringPerturb, std::to_string(failures) + " of " + std::to_string(knots) +
                                                       " perturbed transport knots had no IK solution");
  }
  return out;
}

struct ViolationSummary {
  ErrorStats position_cm;
  ErrorStats orientation_deg;
};

/// Pooled per-knot transport errors over a dataset, in cm and degrees.
inline ViolationSummary dataset_violation_summary(const BimanualModel& model, const std::vector<Episode>& episodes,
                                                  int window = 16, int stride = 8) {
  if (episodes.empty()) throw Error(ErrorCode::EmptyDataset, "no episodes to summarize");
  std::vector<ViolationProfile> profiles;
  profiles.reserve(episodes.size());
  for (const Episode& ep : episodes) profiles.push_back(violation_profile(model, ep, window, stride));
  const EvaluationReport r = aggregate_report(profiles, {});
  return {r.pos_cm, r.rot_deg};
}

}  // namespace bimanifold
