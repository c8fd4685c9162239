#pragma once

// Constraint-violation measurement on episode knots, outcome classification
// from world events, and binomial confidence intervals.

#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "bimanifold/worldsim/episode.hpp"

namespace bimanifold {

inline constexpr const char* kEvalReportSchema = "eval_report_v1";

struct ErrorStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double max = 0.0;
  std::size_t count = 0;

  static ErrorStats of(const std::vector<double>& v) {
    ErrorStats s;
    s.count = v.size();
    if (v.empty()) return s;
    for (double x : v) {
      s.mean += x;
      s.max = std::max(s.max, x);
    }
    s.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size()));
    return s;
  }

  ErrorStats scaled(double k) const { return {mean * k, stddev * k, max * k, count}; }
};

struct WindowRecord {
  int window_start_t = 0;
  Pose reference_rel;
  std::vector<int> t_index;
  std::vector<double> pos_err;  // m
  std::vector<double> rot_err;  // rad
};

struct ViolationProfile {
  std::vector<WindowRecord> windows;
  ErrorStats pos;  // m
  ErrorStats rot;  // rad

  std::vector<double> all_pos() const {
    std::vector<double> v;
    for (const WindowRecord& w : windows) v.insert(v.end(), w.pos_err.begin(), w.pos_err.end());
    return v;
  }
  std::vector<double> all_rot() const {
    std::vector<double> v;
    for (const WindowRecord& w : windows) v.insert(v.end(), w.rot_err.begin(), w.rot_err.end());
    return v;
  }
};

/// Relative-transform errors of the commanded transport knots. Windows of
/// `window` knots start every `stride` transport knots (stride 0 means
/// `stride = window`, i.e. a partition); each window is measured against the
/// relative transform at the observation that precedes it.
inline ViolationProfile violation_profile(const BimanualModel& model, const Episode& ep, int window = 16,
                                          int stride = 8) {
  if (window < 1 || stride < 0) throw Error(ErrorCode::InvalidArgument, "window must be >= 1 and stride >= 0");
  if (stride == 0) stride = window;
  const std::vector<std::size_t> transport = ep.steps_in_phase(Phase::Transport);
  if (transport.empty()) throw Error(ErrorCode::NoTransportPhase, "episode has no transport knots");
  ViolationProfile prof;
  for (std::size_t start = 0; start < transport.size(); start += static_cast<std::size_t>(stride)) {
    const EpisodeStep& first = ep.steps[transport[start]];
    WindowRecord rec;
    rec.window_start_t = first.t_index;
    rec.reference_rel = relative_transform(model, to_state(first.observation));
    const std::size_t end = std::min(transport.size(), start + static_cast<std::size_t>(window));
    for (std::size_t i = start; i < end; ++i) {
      const EpisodeStep& s = ep.steps[transport[i]];
      const PoseError e = pose_distance(relative_transform(model, to_state(s.action)), rec.reference_rel);
      rec.t_index.push_back(s.t_index);
      rec.pos_err.push_back(e.position);
      rec.rot_err.push_back(e.rotation);
    }
    prof.windows.push_back(std::move(rec));
  }
  prof.pos = ErrorStats::of(prof.all_pos());
  prof.rot = ErrorStats::of(prof.all_rot());
  return prof;
}

enum class Outcome { FullSuccess, SingleGripper, BoxDrop, FullFailure };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::FullSuccess: return "I";
    case Outcome::SingleGripper: return "II";
    case Outcome::BoxDrop: return "III";
    case Outcome::FullFailure: return "IV";
  }
  return "?";
}

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::FullSuccess: return "full_success";
    case Outcome::SingleGripper: return "single_gripper_success";
    case Outcome::BoxDrop: return "box_drop";
    case Outcome::FullFailure: return "full_failure";
  }
  return "?";
}

inline bool is_success(Outcome o) { return o == Outcome::FullSuccess || o == Outcome::SingleGripper; }

inline Outcome classify_events(const std::vector<Event>& events) {
  bool attach_l = false, attach_r = false, detached = false;
  for (const Event& e : events) {
    switch (e.kind) {
      case EventKind::GraspAttach:
        (e.arm == ArmSide::Left ? attach_l : attach_r) = true;
        break;
      case EventKind::GraspDetach:
        detached = true;
        break;
      case EventKind::Placed:
        return detached ? Outcome::SingleGripper : Outcome::FullSuccess;
      case EventKind::BoxDrop:
        return attach_l && attach_r ? Outcome::BoxDrop : Outcome::FullFailure;
    }
  }
  return Outcome::FullFailure;
}

inline Outcome classify_outcome(const Episode& ep) {
  if (!ep.events) throw Error(ErrorCode::MissingEventLog, "episode carries no event log");
  return classify_events(*ep.events);
}

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(long long successes, long long trials, double confidence = 0.95) {
  if (trials < 1 || successes < 0 || successes > trials) {
    throw Error(ErrorCode::InvalidCounts, "need trials >= 1 and 0 <= successes <= trials");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorCode::InvalidArgument, "confidence in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), (1.0 + confidence) / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = (z / denom) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

struct EvaluationReport {
  std::size_t n_episodes = 0;
  std::array<std::size_t, 4> counts{};
  std::size_t successes = 0;
  double success_rate = 0.0;
  double confidence = 0.95;
  std::optional<std::pair<double, double>> success_ci;
  std::optional<std::pair<double, double>> full_success_ci;
  ErrorStats pos_cm;
  ErrorStats rot_deg;
};

/// Category counts, success rate with Wilson bounds, and pooled per-knot
/// errors (cm, deg). Profiles may be empty when errors are not wanted.
inline EvaluationReport aggregate_report(const std::vector<ViolationProfile>& profiles,
                                         const std::vector<Outcome>& outcomes, double confidence = 0.95) {
  EvaluationReport r;
  r.confidence = confidence;
  r.n_episodes = outcomes.size();
  for (Outcome o : outcomes) {
    ++r.counts[static_cast<std::size_t>(o)];
    if (is_success(o)) ++r.successes;
  }
  if (r.n_episodes > 0) {
    const auto n = static_cast<long long>(r.n_episodes);
    r.success_rate = static_cast<double>(r.successes) / static_cast<double>(r.n_episodes);
    r.success_ci = wilson_interval(static_cast<long long>(r.successes), n, confidence);
    r.full_success_ci = wilson_interval(static_cast<long long>(r.counts[0]), n, confidence);
  }
  std::vector<double> pos, rot;
  for (const ViolationProfile& p : profiles) {
    const std::vector<double> a = p.all_pos(), b = p.all_rot();
    pos.insert(pos.end(), a.begin(), a.end());
    rot.insert(rot.end(), b.begin(), b.end());
  }
  r.pos_cm = ErrorStats::of(pos).scaled(100.0);
  r.rot_deg = ErrorStats::of(rot).scaled(180.0 / std::numbers::pi);
  return r;
}

inline nlohmann::json to_json(const ErrorStats& s) {
  return {{"mean", s.mean}, {"std", s.stddev}, {"max", s.max}, {"count", s.count}};
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["schema"] = kEvalReportSchema;
  j["n_episodes"] = r.n_episodes;
  nlohmann::json counts;
  for (Outcome o : {Outcome::FullSuccess, Outcome::SingleGripper, Outcome::BoxDrop, Outcome::FullFailure}) {
    counts[outcome_name(o)] = r.counts[static_cast<std::size_t>(o)];
  }
  j["outcome_counts"] = counts;
  j["successes"] = r.successes;
  j["success_rate"] = r.success_rate;
  j["confidence"] = r.confidence;
  auto ci = [](const std::optional<std::pair<double, double>>& c) {
    return c ? nlohmann::json::array({c->first, c->second}) : nlohmann::json(nullptr);
  };
  j["success_wilson"] = ci(r.success_ci);
  j["full_success_wilson"] = ci(r.full_success_ci);
  j["position_error_cm"] = to_json(r.pos_cm);
  j["orientation_error_deg"] = to_json(r.rot_deg);
  return j;
}

}  // namespace bimanifold
