#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bimanifold/bimanual/bimanual.hpp"

namespace bimanifold {

inline constexpr const char* kEpisodeSchema = "episode_v1";

/// [q_left(7), q_right(7), grip_left, grip_right]
using Vec16 = Eigen::Matrix<double, 16, 1>;

inline Vec16 to_vec16(const BimanualState& s) {
  Vec16 v;
  v << s.q_left, s.q_right, s.grip_left, s.grip_right;
  return v;
}

inline BimanualState to_state(const Vec16& v) {
  BimanualState s;
  s.q_left = v.segment<kArmDof>(0);
  s.q_right = v.segment<kArmDof>(kArmDof);
  s.grip_left = v(14);
  s.grip_right = v(15);
  return s;
}

enum class Phase { Approach, Grasp, Transport, Release, Retreat };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Approach: return "approach";
    case Phase::Grasp: return "grasp";
    case Phase::Transport: return "transport";
    case Phase::Release: return "release";
    case Phase::Retreat: return "retreat";
  }
  return "?";
}

inline std::optional<Phase> phase_from_string(const std::string& s) {
  for (Phase p : {Phase::Approach, Phase::Grasp, Phase::Transport, Phase::Release, Phase::Retreat}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

struct EpisodeStep {
  int t_index = 0;
  Vec16 observation = Vec16::Zero();  // state before the action executes
  Vec16 action = Vec16::Zero();       // absolute joint and gripper command
  Phase phase = Phase::Approach;
  bool lock_active = false;

  friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

enum class EventKind { GraspAttach, GraspDetach, BoxDrop, Placed };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::GraspAttach: return "GraspAttach";
    case EventKind::GraspDetach: return "GraspDetach";
    case EventKind::BoxDrop: return "BoxDrop";
    case EventKind::Placed: return "Placed";
  }
  return "?";
}

struct Event {
  int t_index = 0;
  EventKind kind = EventKind::Placed;
  std::optional<ArmSide> arm;  // set for attach/detach

  friend bool operator==(const Event&, const Event&) = default;
};

struct BoxInit {
  double x = 0.0;      // meters
  double y = 0.0;      // meters
  double theta = 0.0;  // radians

  friend bool operator==(const BoxInit&, const BoxInit&) = default;
};

struct EpisodeMetadata {
  std::uint64_t seed = 0;
  BoxInit box_init;
  int perturbation_level = 0;  // -1 when a raw eta was given
  double eta = 0.0;
  std::uint64_t perturbation_seed = 0;
  int ik_failures = 0;
  ArmSide control_arm = ArmSide::Right;
  bool truncated = false;
  std::string config_hash;  // producing pipeline config, empty if none

  friend bool operator==(const EpisodeMetadata&, const EpisodeMetadata&) = default;
};

struct Episode {
  std::string schema_version = kEpisodeSchema;
  std::string model_ref;
  double dt = 0.1;  // seconds per knot
  std::vector<EpisodeStep> steps;
  std::optional<std::vector<Event>> events = std::vector<Event>{};
  EpisodeMetadata metadata;

  friend bool operator==(const Episode&, const Episode&) = default;

  std::vector<std::size_t> steps_in_phase(Phase p) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (steps[i].phase == p) idx.push_back(i);
    }
    return idx;
  }
};

}  // namespace bimanifold
