#pragma once

// Scripted bimanual demonstrations standing in for a human teleoperator:
// approach, descend, lock, close, lift, carry to the shelf, insert, open,
// unlock, retreat. Each segment's duration is jittered per seed.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "bimanifold/worldsim/executor.hpp"

namespace bimanifold {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BoxInitDistribution {
  Interval x, y, theta;

  BoxInitDistribution(Interval x_range, Interval y_range, Interval theta_range)
      : x(x_range), y(y_range), theta(theta_range) {
    for (const Interval* r : {&x, &y, &theta}) {
      if (!(r->lo < r->hi)) throw Error(ErrorCode::InvalidArgument, "box init ranges must be non-empty [lo, hi)");
    }
  }

  static BoxInitDistribution training() {
    return {{-0.2, 0.2}, {0.55, 0.65}, {-std::numbers::pi / 8, std::numbers::pi / 8}};
  }
  static BoxInitDistribution evaluation() {
    return {{-0.1, 0.1}, {0.575, 0.625}, {-std::numbers::pi / 16, std::numbers::pi / 16}};
  }
};

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-item seed from a master seed and an index; independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0) {
  return mix64(mix64(master ^ mix64(stream)) + index);
}

namespace detail {
// Uniform on [lo, hi); guards the rare rounding of lo + u*(hi-lo) up to hi.
inline double uniform_half_open(std::mt19937_64& rng, const Interval& r) {
  const double v = std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  return v < r.hi ? v : std::nextafter(r.hi, r.lo);
}
}  // namespace detail

inline BoxInit sample_box_init(const BoxInitDistribution& dist, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BoxInit b;
  b.x = detail::uniform_half_open(rng, dist.x);
  b.y = detail::uniform_half_open(rng, dist.y);
  b.theta = detail::uniform_half_open(rng, dist.theta);
  return b;
}

namespace detail {

inline double min_jerk(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }

struct Knot {
  Vec16 state;
  Phase phase;
  bool lock;
};

class ScriptBuilder {
 public:
  ScriptBuilder(const BimanualModel& model, const TaskConfig& cfg, std::array<double, 2> psi, std::uint64_t seed)
      : model_(model), cfg_(cfg), psi_(psi), rng_(seed) {}

  int jittered(int nominal) {
    const double j = cfg_.script.timing_jitter;
    const double f = j > 0 ? std::uniform_real_distribution<double>(1.0 - j, 1.0 + j)(rng_) : 1.0;
    return std::max(1, static_cast<int>(std::lround(nominal * f)));
  }

  JointConfig solve(ArmSide side, const Pose& target) const {
    try {
      return inverse_kinematics(model_.arm(side), target, psi_[side_index(side)], cfg_.script.branch(side), true);
    } catch (const Error& e) {
      throw Error(ErrorCode::PathInfeasible, std::string(to_string(side)) + " arm: " + e.what());
    }
  }

  void start(const Pose& left, const Pose& right) {
    BimanualState s;
    s.q_left = solve(ArmSide::Left, left);
    s.q_right = solve(ArmSide::Right, right);
    knots_.push_back({to_vec16(s), Phase::Approach, false});
  }

  /// Free motion of both grippers between poses.
  void move_free(const std::array<Pose, 2>& from, const std::array<Pose, 2>& to, int n, Phase phase) {
    const Vec16 last = knots_.back().state;
    for (int j = 1; j <= n; ++j) {
      const double s = min_jerk(static_cast<double>(j) / n);
      BimanualState st = to_state(last);
      st.q_left = solve(ArmSide::Left, interpolate(from[0], to[0], s));
      st.q_right = solve(ArmSide::Right, interpolate(from[1], to[1], s));
      knots_.push_back({to_vec16(st), phase, false});
    }
  }

  /// Holds the arms and ramps both grippers linearly to `grip`.
  void ramp_grippers(double grip, int n, Phase phase) {
    const Vec16 last = knots_.back().state;
    for (int j = 1; j <= n; ++j) {
      Vec16 v = last;
      const double s = static_cast<double>(j) / n;
      v(14) = (1.0 - s) * last(14) + s * grip;
      v(15) = (1.0 - s) * last(15) + s * grip;
      knots_.push_back({v, phase, true});
    }
  }

  /// Carries the box along a pose path with the transform lock engaged.
  void carry(const TransformLock& lock, const Pose& box_from, const Pose& box_to, int n) {
    const ArmSide ctrl = lock.control_arm;
    const ArmSide sub = lock.subordinate_arm();
    const Pose grasp_ctrl = cfg_.nominal_grasp(ctrl);
    for (int j = 1; j <= n; ++j) {
      const double s = min_jerk(static_cast<double>(j) / n);
      BimanualState st = to_state(knots_.back().state);
      const Pose ctrl_pose = interpolate(box_from, box_to, s) * grasp_ctrl;
      st.q(ctrl) = solve(ctrl, ctrl_pose);
      const SubordinateCommand c = subordinate_command(model_, lock, forward_kinematics(model_.arm(ctrl), st.q(ctrl)),
                                                       psi_[side_index(sub)], cfg_.script.branch(sub), st.q(sub));
      if (c.held) throw Error(ErrorCode::PathInfeasible, "subordinate arm cannot follow the lock");
      st.q(sub) = c.q;
      knots_.push_back({to_vec16(st), Phase::Transport, true});
    }
  }

  std::array<Pose, 2> gripper_poses() const { return detail::gripper_poses(model_, to_state(knots_.back().state)); }
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  const BimanualModel& model_;
  const TaskConfig& cfg_;
  std::array<double, 2> psi_;
  std::mt19937_64 rng_;
  std::vector<Knot> knots_;
};

inline Pose world_shift(const Pose& p, const Vector3& d) { return {p.rotation, p.translation + d}; }
inline Pose local_shift(const Pose& p, const Vector3& d) { return {p.rotation, p.translation + p.rotation * d}; }

}  // namespace detail

inline double joint_margin(const ArmModel& arm, const JointConfig& q) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kArmDof; ++i) m = std::min({m, q(i) - arm.limit(i).lo, arm.limit(i).hi - q(i)});
  return m;
}

/// Arm angle on a grid with the widest worst-case joint margin over `poses`.
/// Empty when no grid value keeps every pose reachable within limits.
inline std::optional<double> select_psi(const ArmModel& arm, const std::vector<Pose>& poses, const IkBranch& branch,
                                        double step) {
  std::optional<double> best;
  double best_margin = 0.0;
  const int n = static_cast<int>(std::floor(2 * std::numbers::pi / step));
  for (int k = 0; k < n; ++k) {
    const double psi = -std::numbers::pi + k * step;
    double margin = std::numeric_limits<double>::infinity();
    try {
      for (const Pose& p : poses) margin = std::min(margin, joint_margin(arm, inverse_kinematics(arm, p, psi, branch, false)));
    } catch (const Error&) {
      continue;
    }
    if (margin > best_margin) {
      best_margin = margin;
      best = psi;
    }
  }
  return best;
}

namespace detail {

struct ScriptPoses {
  Pose box0, lifted, preplace, shelf;
  std::array<Pose, 2> grasp, pre, home, away;
};

inline ScriptPoses script_poses(const TaskConfig& c, const BoxInit& init) {
  const ScriptConfig& sc = c.script;
  ScriptPoses p;
  p.box0 = c.box_pose(init);
  p.lifted = world_shift(p.box0, {0, 0, sc.lift_height});
  p.preplace = c.shelf_pose * make_translation(sc.preplace_offset);
  p.shelf = c.shelf_pose;
  for (ArmSide s : {ArmSide::Left, ArmSide::Right}) {
    const std::size_t i = side_index(s);
    p.grasp[i] = p.box0 * c.nominal_grasp(s);
    p.pre[i] = world_shift(local_shift(p.grasp[i], {0, 0, -sc.pregrasp_backoff}), {0, 0, sc.pregrasp_raise});
    p.home[i] = world_shift(p.pre[i], {0, 0, sc.home_raise});
    p.away[i] = world_shift(local_shift(p.shelf * c.nominal_grasp(s), {0, 0, -sc.retreat_backoff}),
                            {0, 0, sc.retreat_raise});
  }
  return p;
}

}  // namespace detail

/// Arm angles used for a demonstration at `init`. Throws UnreachableGrasp
/// when an arm cannot reach its grasp pose within limits for any arm angle,
/// and PathInfeasible when the grasp is reachable but the rest of the script
/// is not.
inline std::array<double, 2> demonstration_psi(const BimanualModel& model, const TaskConfig& c, const BoxInit& init) {
  const ScriptConfig& sc = c.script;
  const detail::ScriptPoses p = detail::script_poses(c, init);
  std::array<double, 2> psi{sc.psi_left, sc.psi_right};
  for (ArmSide s : {ArmSide::Left, ArmSide::Right}) {
    const std::size_t i = side_index(s);
    const ArmModel& arm = model.arm(s);
    const double step = sc.auto_psi ? sc.psi_grid_step : 2 * std::numbers::pi;
    const Pose g = c.nominal_grasp(s);
    if (sc.auto_psi) {
      if (!select_psi(arm, {p.grasp[i]}, sc.branch(s), step)) {
        throw Error(ErrorCode::UnreachableGrasp, std::string(to_string(s)) + " arm cannot reach its grasp pose");
      }
      const std::vector<Pose> way{p.home[i],
                                  p.pre[i],
                                  p.grasp[i],
                                  p.lifted * g,
                                  interpolate(p.lifted, p.preplace, 0.5) * g,
                                  p.preplace * g,
                                  p.shelf * g,
                                  p.away[i]};
      const std::optional<double> best = select_psi(arm, way, sc.branch(s), step);
      if (!best) throw Error(ErrorCode::PathInfeasible, std::string(to_string(s)) + " arm: no arm angle covers the script");
      psi[i] = *best;
    } else {
      try {
        inverse_kinematics(arm, p.grasp[i], psi[i], sc.branch(s), true);
      } catch (const Error& e) {
        throw Error(ErrorCode::UnreachableGrasp, std::string(to_string(s)) + " grasp pose: " + e.what());
      }
    }
  }
  return psi;
}

/// Scripted demonstration for one box placement. The episode records the
/// world's events from a replay of its own actions.
inline Episode generate_demonstration(const BimanualModel& model, std::shared_ptr<const TaskConfig> cfg,
                                      const BoxInit& init, std::uint64_t seed) {
  cfg->validate();
  const TaskConfig& c = *cfg;
  const ScriptConfig& sc = c.script;
  const std::array<double, 2> psi = demonstration_psi(model, c, init);
  const detail::ScriptPoses p = detail::script_poses(c, init);

  detail::ScriptBuilder b(model, c, psi, seed);
  const Pose& box0 = p.box0;
  const std::array<Pose, 2>& grasp = p.grasp;
  const std::array<Pose, 2>& pre = p.pre;
  const std::array<Pose, 2>& home = p.home;

  b.start(home[0], home[1]);
  b.move_free(home, pre, b.jittered(sc.approach_knots), Phase::Approach);
  b.move_free(pre, grasp, b.jittered(sc.descend_knots), Phase::Approach);

  const TransformLock lock = engage_lock(model, to_state(b.knots().back().state), c.control_arm, c.lock_tolerances);
  b.ramp_grippers(1.0, b.jittered(sc.close_knots), Phase::Grasp);

  b.carry(lock, box0, p.lifted, b.jittered(sc.lift_knots));
  b.carry(lock, p.lifted, p.preplace, b.jittered(sc.move_knots));
  b.carry(lock, p.preplace, p.shelf, b.jittered(sc.insert_knots));

  b.ramp_grippers(0.0, b.jittered(sc.open_knots), Phase::Release);

  b.move_free(b.gripper_poses(), p.away, b.jittered(sc.retreat_knots), Phase::Retreat);

  Episode ep;
  ep.model_ref = model.left.name() + "+" + model.right.name();
  ep.dt = c.dt;
  ep.metadata.seed = seed;
  ep.metadata.box_init = init;
  ep.metadata.control_arm = c.control_arm;
  const std::vector<detail::Knot>& k = b.knots();
  TaskWorld world = TaskWorld::create(cfg, init);
  std::vector<Event> events;
  for (std::size_t t = 0; t < k.size(); ++t) {
    const Vec16& obs = k[t == 0 ? 0 : t - 1].state;
    ep.steps.push_back({static_cast<int>(t), obs, k[t].state, k[t].phase, k[t].lock});
    const std::vector<Event> ev = advance_knot(world, model, obs, k[t].state, static_cast<int>(t));
    events.insert(events.end(), ev.begin(), ev.end());
  }
  ep.events = std::move(events);
  return ep;
}

}  // namespace bimanifold
