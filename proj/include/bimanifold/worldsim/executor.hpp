#pragma once

// Receding-horizon execution: ask a source for a chunk of absolute commands,
// run the first few with a first-order hold between knots, observe, repeat.

#include <optional>
#include <vector>

#include "bimanifold/worldsim/task_world.hpp"

namespace bimanifold {

struct ChunkAction {
  Vec16 action = Vec16::Zero();
  Phase phase = Phase::Approach;
  bool lock_active = false;
};

class ActionStream {
 public:
  virtual ~ActionStream() = default;
  virtual Vec16 initial_observation() const = 0;
  /// Next chunk given the previous and latest observations. An empty optional
  /// ends the stream. Sources that run dry unexpectedly throw StreamExhausted.
  virtual std::optional<std::vector<ChunkAction>> next_chunk(const Vec16& previous_obs, const Vec16& latest_obs,
                                                             int t_index) = 0;
};

/// Replays the stored actions of an episode, starting at the requested knot.
class ReplayStream final : public ActionStream {
 public:
  explicit ReplayStream(const Episode& ep, int chunk = 16) : ep_(&ep), chunk_(chunk) {
    if (ep.steps.empty()) throw Error(ErrorCode::InvalidArgument, "cannot replay an empty episode");
  }

  Vec16 initial_observation() const override { return ep_->steps.front().observation; }

  std::optional<std::vector<ChunkAction>> next_chunk(const Vec16&, const Vec16&, int t_index) override {
    const auto n = static_cast<int>(ep_->steps.size());
    if (t_index >= n) return std::nullopt;
    std::vector<ChunkAction> out;
    for (int t = t_index; t < std::min(n, t_index + chunk_); ++t) {
      const EpisodeStep& s = ep_->steps[static_cast<std::size_t>(t)];
      out.push_back({s.action, s.phase, s.lock_active});
    }
    return out;
  }

 private:
  const Episode* ep_;
  int chunk_;
};

/// Command at substep i of n between knots a and b.
inline Vec16 first_order_hold(const Vec16& a, const Vec16& b, int i, int n) {
  if (i == n) return b;
  const double s = static_cast<double>(i) / n;
  return a + s * (b - a);
}

/// Drives the world from the current command to the next knot. Returns the
/// events raised along the way; `world` is updated in place.
inline std::vector<Event> advance_knot(TaskWorld& world, const BimanualModel& model, const Vec16& from,
                                       const Vec16& to, int t_index) {
  const int n = world.config->substeps;
  const double dt_sub = world.config->dt / n;
  std::vector<Event> events;
  BimanualState prev = to_state(from);
  for (int i = 1; i <= n; ++i) {
    const BimanualState cmd = to_state(first_order_hold(from, to, i, n));
    WorldStepResult r = step_world(world, model, prev, cmd, t_index, dt_sub);
    world = std::move(r.world);
    events.insert(events.end(), r.events.begin(), r.events.end());
    prev = cmd;
  }
  return events;
}

struct ExecutorConfig {
  int chunk = 16;
  int execute = 8;
  int max_steps = 100000;

  void validate() const {
    if (chunk < 1 || execute < 1 || execute > chunk) {
      throw Error(ErrorCode::InvalidArgument, "need 1 <= execute <= chunk");
    }
  }
};

inline Episode execute_chunked(const BimanualModel& model, TaskWorld world, ActionStream& stream,
                               const ExecutorConfig& cfg = {}, EpisodeMetadata meta = {}) {
  cfg.validate();
  Episode ep;
  ep.dt = world.config->dt;
  ep.model_ref = model.left.name() + "+" + model.right.name();
  std::vector<Event> events;
  Vec16 state = stream.initial_observation();
  Vec16 previous = state;
  meta.truncated = false;
  int t = 0;
  try {
    while (t < cfg.max_steps) {
      std::optional<std::vector<ChunkAction>> chunk = stream.next_chunk(previous, state, t);
      if (!chunk || chunk->empty()) break;
      const std::size_t run = std::min<std::size_t>(chunk->size(), static_cast<std::size_t>(cfg.execute));
      for (std::size_t i = 0; i < run && t < cfg.max_steps; ++i, ++t) {
        const ChunkAction& a = (*chunk)[i];
        ep.steps.push_back({t, state, a.action, a.phase, a.lock_active});
        const std::vector<Event> ev = advance_knot(world, model, state, a.action, t);
        events.insert(events.end(), ev.begin(), ev.end());
        previous = state;
        state = a.action;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::StreamExhausted) throw;
    meta.truncated = true;
  }
  ep.events = std::move(events);
  ep.metadata = meta;
  return ep;
}

}  // namespace bimanifold
