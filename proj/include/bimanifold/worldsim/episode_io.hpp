#pragma once

// Episode datasets as JSON Lines: one self-describing episode per line.
// Doubles are printed in shortest round-trip form, so reading a file back
// reproduces every value bit for bit.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimanifold/worldsim/episode.hpp"

namespace bimanifold {

namespace detail {

inline nlohmann::json vec16_to(const Vec16& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vec16 vec16_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 16) throw std::invalid_argument("expected a 16-vector");
  Vec16 v;
  for (Eigen::Index i = 0; i < 16; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::json episode_to_json(const Episode& ep) {
  using nlohmann::json;
  json j;
  j["schema_version"] = ep.schema_version;
  j["model_ref"] = ep.model_ref;
  j["dt"] = ep.dt;
  const EpisodeMetadata& m = ep.metadata;
  j["metadata"] = {{"seed", m.seed},
                   {"box_init", json::array({m.box_init.x, m.box_init.y, m.box_init.theta})},
                   {"perturbation_level", m.perturbation_level},
                   {"eta", m.eta},
                   {"perturbation_seed", m.perturbation_seed},
                   {"ik_failures", m.ik_failures},
                   {"control_arm", to_string(m.control_arm)},
                   {"truncated", m.truncated}};
  if (!m.config_hash.empty()) j["metadata"]["config_hash"] = m.config_hash;
  json steps = json::array();
  for (const EpisodeStep& s : ep.steps) {
    steps.push_back({{"t", s.t_index},
                     {"obs", detail::vec16_to(s.observation)},
                     {"act", detail::vec16_to(s.action)},
                     {"phase", to_string(s.phase)},
                     {"lock", s.lock_active}});
  }
  j["steps"] = std::move(steps);
  if (ep.events) {
    json events = json::array();
    for (const Event& e : *ep.events) {
      json je = {{"t", e.t_index}, {"kind", to_string(e.kind)}};
      if (e.arm) je["arm"] = to_string(*e.arm);
      events.push_back(std::move(je));
    }
    j["events"] = std::move(events);
  }
  return j;
}

inline std::optional<EventKind> event_kind_from_string(const std::string& s) {
  for (EventKind k : {EventKind::GraspAttach, EventKind::GraspDetach, EventKind::BoxDrop, EventKind::Placed}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Throws SchemaMismatch for other versions and MalformedRecord (tagged with
/// `line`) for anything structurally wrong.
inline Episode episode_from_json(const nlohmann::json& j, std::size_t line = 0) {
  if (!j.is_object()) throw MalformedRecordError(line, "episode record must be an object");
  if (!j.contains("schema_version") || !j["schema_version"].is_string()) {
    throw MalformedRecordError(line, "missing schema_version");
  }
  const std::string version = j["schema_version"].get<std::string>();
  if (version != kEpisodeSchema) {
    throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(line) + ": unsupported episode schema '" +
                                               version + "' (expected " + kEpisodeSchema + ")");
  }
  try {
    Episode ep;
    ep.schema_version = version;
    ep.model_ref = j.at("model_ref").get<std::string>();
    ep.dt = j.at("dt").get<double>();
    const auto& m = j.at("metadata");
    ep.metadata.seed = m.at("seed").get<std::uint64_t>();
    const auto& b = m.at("box_init");
    if (!b.is_array() || b.size() != 3) throw std::invalid_argument("box_init must have 3 entries");
    ep.metadata.box_init = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>()};
    ep.metadata.perturbation_level = m.at("perturbation_level").get<int>();
    ep.metadata.eta = m.at("eta").get<double>();
    ep.metadata.perturbation_seed = m.at("perturbation_seed").get<std::uint64_t>();
    ep.metadata.ik_failures = m.at("ik_failures").get<int>();
    ep.metadata.control_arm = arm_side_from_string(m.at("control_arm").get<std::string>());
    ep.metadata.truncated = m.at("truncated").get<bool>();
    if (m.contains("config_hash")) ep.metadata.config_hash = m.at("config_hash").get<std::string>();
    for (const auto& s : j.at("steps")) {
      EpisodeStep st;
      st.t_index = s.at("t").get<int>();
      st.observation = detail::vec16_from(s.at("obs"));
      st.action = detail::vec16_from(s.at("act"));
      const std::optional<Phase> ph = phase_from_string(s.at("phase").get<std::string>());
      if (!ph) throw std::invalid_argument("unknown phase");
      st.phase = *ph;
      st.lock_active = s.at("lock").get<bool>();
      ep.steps.push_back(st);
    }
    if (j.contains("events")) {
      std::vector<Event> events;
      for (const auto& e : j.at("events")) {
        Event ev;
        ev.t_index = e.at("t").get<int>();
        const std::optional<EventKind> k = event_kind_from_string(e.at("kind").get<std::string>());
        if (!k) throw std::invalid_argument("unknown event kind");
        ev.kind = *k;
        if (e.contains("arm")) ev.arm = arm_side_from_string(e.at("arm").get<std::string>());
        events.push_back(ev);
      }
      ep.events = std::move(events);
    } else {
      ep.events.reset();
    }
    return ep;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecordError(line, e.what());
  } catch (const std::invalid_argument& e) {
    throw MalformedRecordError(line, e.what());
  } catch (const Error& e) {
    throw MalformedRecordError(line, e.what());
  }
}

inline std::string episode_to_line(const Episode& ep) { return episode_to_json(ep).dump(); }

inline void write_episodes(const std::filesystem::path& path, const std::vector<Episode>& episodes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  for (const Episode& ep : episodes) out << episode_to_line(ep) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

inline std::vector<Episode> read_episodes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open episode file '" + path.string() + "'");
  std::vector<Episode> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecordError(line, std::string("not valid JSON: ") + e.what());
    }
    out.push_back(episode_from_json(j, line));
  }
  return out;
}

}  // namespace bimanifold
