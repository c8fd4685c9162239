#pragma once

// Batch pipeline behind the command-line tool: demonstration generation,
// perturbation, replay evaluation and curvature analysis. Each command is a
// pure function of its configuration and input files; outputs are ordered
// by episode index whatever the worker count.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bimanifold/manifold/rollout.hpp"
#include "bimanifold/perturb/perturb.hpp"
#include "bimanifold/stats/stats.hpp"
#include "bimanifold/worldsim/config_io.hpp"
#include "bimanifold/worldsim/episode_io.hpp"
#include "bimanifold/worldsim/executor.hpp"

namespace bimanifold {

inline constexpr const char* kPipelineSchema = "pipeline_v1";
inline constexpr const char* kGenManifestSchema = "gen_manifest_v1";
inline constexpr const char* kPerturbSummarySchema = "perturb_summary_v1";
inline constexpr const char* kCurvatureSeriesSchema = "curvature_series_v1";
inline constexpr const char* kCurvatureAnalysisSchema = "curvature_analysis_v1";

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path arm_left;    // empty: built-in model
  fs::path arm_right;   // empty: built-in model
  fs::path task_world;  // empty: built-in task
  std::string distribution = "train";

  int n_episodes = 200;
  std::uint64_t master_seed = 1;

  int perturbation_level = 0;
  std::optional<double> eta;  // overrides the level when set
  std::uint64_t perturbation_seed = 2;

  int window = 16;
  int stride = 8;
  double confidence = 0.95;

  int chunk = 16;
  int execute = 8;

  DiffMode diff_mode = DiffMode::ForwardDual;
  double fd_step = 1e-5;
  double rank_tolerance = 1e-8;

  fs::path output_dir = "out";
  unsigned threads = 1;

  void validate() const {
    if (n_episodes < 1) throw Error(ErrorCode::ConfigError, "n_episodes must be >= 1");
    if (distribution != "train" && distribution != "eval") {
      throw Error(ErrorCode::ConfigError, "distribution must be 'train' or 'eval', got '" + distribution + "'");
    }
    if (perturbation_level < 0 || perturbation_level > 3) {
      throw Error(ErrorCode::ConfigError, "perturbation level must be 0-3");
    }
    if (eta && !(*eta >= 0.0)) throw Error(ErrorCode::ConfigError, "eta must be non-negative");
    if (window < 1 || stride < 0) throw Error(ErrorCode::ConfigError, "need window >= 1 and stride >= 0");
    if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorCode::ConfigError, "confidence must be in (0, 1)");
    if (chunk < 1 || execute < 1 || execute > chunk) {
      throw Error(ErrorCode::ConfigError, "need 1 <= execute <= chunk");
    }
    if (!(fd_step > 0.0)) throw Error(ErrorCode::ConfigError, "fd_step must be positive");
    if (!(rank_tolerance > 0.0)) throw Error(ErrorCode::ConfigError, "rank_tolerance must be positive");
    for (const fs::path* p : {&arm_left, &arm_right, &task_world}) {
      if (!p->empty() && !fs::exists(*p)) {
        throw Error(ErrorCode::IoError, "referenced file '" + p->string() + "' does not exist");
      }
    }
  }

  PerturbationLevel perturbation() const {
    return eta ? PerturbationLevel::from_eta(*eta) : PerturbationLevel::from_level(perturbation_level);
  }

  BoxInitDistribution box_distribution() const {
    return distribution == "eval" ? BoxInitDistribution::evaluation() : BoxInitDistribution::training();
  }

  CurvatureOptions curvature() const {
    CurvatureOptions o;
    o.diff.mode = diff_mode;
    o.diff.fd_step = fd_step;
    o.rank_tolerance = rank_tolerance;
    return o;
  }

  ExecutorConfig executor() const {
    ExecutorConfig e;
    e.chunk = chunk;
    e.execute = execute;
    return e;
  }
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Reads a pipeline_v1 document. Relative paths resolve against `base_dir`,
/// normally the directory holding the file.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  using namespace io;
  expect_schema(j, kPipelineSchema, "pipeline config");
  PipelineConfig c;
  try {
    reject_unknown(j,
                   {"schema", "models", "task_world", "distribution", "generation", "perturbation", "metrics",
                    "execution", "curvature", "output_dir", "threads"},
                   "pipeline config");
    if (j.contains("models")) {
      const json& m = j.at("models");
      reject_unknown(m, {"left", "right"}, "models");
      if (m.contains("left")) c.arm_left = detail::resolve(base_dir, m.at("left").get<std::string>());
      if (m.contains("right")) c.arm_right = detail::resolve(base_dir, m.at("right").get<std::string>());
    }
    if (j.contains("task_world")) c.task_world = detail::resolve(base_dir, j.at("task_world").get<std::string>());
    read_opt(j, "distribution", c.distribution);
    if (j.contains("generation")) {
      const json& g = j.at("generation");
      reject_unknown(g, {"n_episodes", "master_seed"}, "generation");
      read_opt(g, "n_episodes", c.n_episodes);
      read_opt(g, "master_seed", c.master_seed);
    }
    if (j.contains("perturbation")) {
      const json& p = j.at("perturbation");
      reject_unknown(p, {"level", "eta", "seed"}, "perturbation");
      read_opt(p, "level", c.perturbation_level);
      if (p.contains("eta") && !p.at("eta").is_null()) c.eta = p.at("eta").get<double>();
      read_opt(p, "seed", c.perturbation_seed);
    }
    if (j.contains("metrics")) {
      const json& m = j.at("metrics");
      reject_unknown(m, {"window", "stride", "confidence"}, "metrics");
      read_opt(m, "window", c.window);
      read_opt(m, "stride", c.stride);
      read_opt(m, "confidence", c.confidence);
    }
    if (j.contains("execution")) {
      const json& e = j.at("execution");
      reject_unknown(e, {"chunk", "execute"}, "execution");
      read_opt(e, "chunk", c.chunk);
      read_opt(e, "execute", c.execute);
    }
    if (j.contains("curvature")) {
      const json& k = j.at("curvature");
      reject_unknown(k, {"diff_mode", "fd_step", "rank_tolerance"}, "curvature");
      if (k.contains("diff_mode")) c.diff_mode = diff_mode_from_string(k.at("diff_mode").get<std::string>());
      read_opt(k, "fd_step", c.fd_step);
      read_opt(k, "rank_tolerance", c.rank_tolerance);
    }
    if (j.contains("output_dir")) c.output_dir = detail::resolve(base_dir, j.at("output_dir").get<std::string>());
    read_opt(j, "threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("pipeline config: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "config file '" + path.string() + "' does not exist");
  try {
    return pipeline_config_from_json(io::read_json_file(path), path.parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

/// Loaded models and task world shared by every command.
struct PipelineInputs {
  std::shared_ptr<const BimanualModel> model;
  std::shared_ptr<const TaskConfig> task;
};

inline PipelineInputs load_inputs(const PipelineConfig& c) {
  c.validate();
  BimanualModel m = BimanualModel::default_pair();
  if (!c.arm_left.empty()) m.left = load_arm_model(c.arm_left);
  if (!c.arm_right.empty()) m.right = load_arm_model(c.arm_right);
  TaskConfig t = c.task_world.empty() ? TaskConfig{} : load_task_config(c.task_world);
  t.validate();
  return {std::make_shared<const BimanualModel>(std::move(m)), std::make_shared<const TaskConfig>(std::move(t))};
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of everything that can change an output: model and task contents
/// and the numeric settings. Paths, output directory and worker count are
/// left out, so relocating files or changing parallelism keeps the hash.
inline std::string config_hash(const PipelineConfig& c, const PipelineInputs& in) {
  nlohmann::json j;
  j["schema"] = kPipelineSchema;
  j["models"] = {{"left", arm_model_to_json(in.model->left)}, {"right", arm_model_to_json(in.model->right)}};
  j["task_world"] = task_config_to_json(*in.task);
  j["distribution"] = c.distribution;
  j["generation"] = {{"n_episodes", c.n_episodes}, {"master_seed", c.master_seed}};
  j["perturbation"] = {{"level", c.perturbation_level},
                       {"eta", c.eta ? nlohmann::json(*c.eta) : nlohmann::json(nullptr)},
                       {"seed", c.perturbation_seed}};
  j["metrics"] = {{"window", c.window}, {"stride", c.stride}, {"confidence", c.confidence}};
  j["execution"] = {{"chunk", c.chunk}, {"execute", c.execute}};
  j["curvature"] = {{"diff_mode", to_string(c.diff_mode)}, {"fd_step", c.fd_step},
                    {"rank_tolerance", c.rank_tolerance}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

/// Exit status for a failure: 2 configuration or IO, 3 data, 4 numerical.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::IoError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidModel:
      return 2;
    case ErrorCode::SchemaMismatch:
    case ErrorCode::MalformedRecord:
    case ErrorCode::EmptyDataset:
    case ErrorCode::NoTransportPhase:
    case ErrorCode::MissingEventLog:
    case ErrorCode::InvalidCounts:
    case ErrorCode::InsufficientCategory:
    case ErrorCode::UnreachableGrasp:
    case ErrorCode::PathInfeasible:
    case ErrorCode::StreamExhausted:
    case ErrorCode::IkFailureDuringPerturb:
      return 3;
    default:
      return 4;
  }
}

namespace detail {

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

inline std::vector<Episode> read_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "dataset '" + path.string() + "' does not exist");
  std::vector<Episode> eps = read_episodes(path);
  if (eps.empty()) throw Error(ErrorCode::EmptyDataset, "dataset '" + path.string() + "' holds no episodes");
  return eps;
}

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

}  // namespace detail

/// What a command wrote plus a short human-readable summary.
struct CommandResult {
  std::vector<fs::path> files;
  std::string summary;
};

inline constexpr std::uint64_t kInitSeedStream = 0;
inline constexpr std::uint64_t kScriptSeedStream = 1;

/// Demonstration dataset. Attempt a draws its box placement from
/// derive_seed(master, a, 0) and its script from derive_seed(master, a, 1);
/// attempts whose placement admits no feasible script are recorded and
/// skipped. The dataset holds the first n successful attempts.
inline CommandResult cmd_gen(const PipelineConfig& c) {
  const PipelineInputs in = load_inputs(c);
  const std::string hash = config_hash(c, in);
  const BoxInitDistribution dist = c.box_distribution();
  const auto n = static_cast<std::size_t>(c.n_episodes);
  const std::size_t max_attempts = 10 * n + 100;

  struct Attempt {
    BoxInit init;
    std::uint64_t init_seed = 0, script_seed = 0;
    std::optional<Episode> episode;
    std::string error;
  };
  std::vector<Attempt> attempts;
  std::size_t accepted = 0;
  while (accepted < n) {
    const std::size_t first = attempts.size();
    if (first >= max_attempts) {
      throw Error(ErrorCode::PathInfeasible, "only " + std::to_string(accepted) + " of " + std::to_string(n) +
                                                 " demonstrations feasible after " + std::to_string(first) +
                                                 " attempts");
    }
    const std::size_t block = std::min(n - accepted, max_attempts - first);
    attempts.resize(first + block);
    parallel_for(block, c.threads, [&](std::size_t k) {
      Attempt& a = attempts[first + k];
      a.init_seed = derive_seed(c.master_seed, first + k, kInitSeedStream);
      a.script_seed = derive_seed(c.master_seed, first + k, kScriptSeedStream);
      a.init = sample_box_init(dist, a.init_seed);
      try {
        a.episode = generate_demonstration(*in.model, in.task, a.init, a.script_seed);
        a.episode->metadata.config_hash = hash;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnreachableGrasp && e.code() != ErrorCode::PathInfeasible) throw;
        a.error = e.what();
      }
    });
    for (std::size_t k = first; k < attempts.size(); ++k) accepted += attempts[k].episode ? 1 : 0;
  }

  std::vector<Episode> episodes;
  nlohmann::json seeds = nlohmann::json::array();
  nlohmann::json rejected = nlohmann::json::array();
  for (std::size_t a = 0; a < attempts.size() && episodes.size() < n; ++a) {
    const Attempt& at = attempts[a];
    const nlohmann::json init = {at.init.x, at.init.y, at.init.theta};
    if (at.episode) {
      seeds.push_back({{"index", episodes.size()},
                       {"attempt", a},
                       {"init_seed", at.init_seed},
                       {"script_seed", at.script_seed},
                       {"box_init", init}});
      episodes.push_back(*at.episode);
    } else {
      rejected.push_back({{"attempt", a}, {"box_init", init}, {"error", at.error}});
    }
  }

  detail::ensure_dir(c.output_dir);
  const fs::path data = c.output_dir / "episodes.jsonl";
  const fs::path manifest = c.output_dir / "gen_manifest.json";
  write_episodes(data, episodes);
  detail::write_json(manifest, {{"schema", kGenManifestSchema},
                                {"config_hash", hash},
                                {"episode_schema", kEpisodeSchema},
                                {"distribution", c.distribution},
                                {"master_seed", c.master_seed},
                                {"n_episodes", episodes.size()},
                                {"episodes", seeds},
                                {"rejected", rejected}});
  std::ostringstream s;
  s << "generated " << episodes.size() << " episodes (" << rejected.size() << " placements rejected), config "
    << hash << "\n";
  return {{data, manifest}, s.str()};
}

/// Perturbed copy of a dataset plus a summary of its constraint errors.
inline CommandResult cmd_perturb(const PipelineConfig& c, const fs::path& dataset) {
  const PipelineInputs in = load_inputs(c);
  const std::string hash = config_hash(c, in);
  const std::vector<Episode> eps = detail::read_dataset(dataset);
  const PerturbationLevel level = c.perturbation();
  std::vector<Episode> out = perturb_dataset(*in.model, eps, level, c.perturbation_seed, {}, c.threads);
  for (Episode& ep : out) ep.metadata.config_hash = hash;
  const ViolationSummary v = dataset_violation_summary(*in.model, out, c.window, c.stride);
  long long failures = 0;
  for (const Episode& ep : out) failures += ep.metadata.ik_failures;

  detail::ensure_dir(c.output_dir);
  const fs::path data = c.output_dir / "perturbed.jsonl";
  const fs::path summary = c.output_dir / "perturb_summary.json";
  write_episodes(data, out);
  detail::write_json(summary, {{"schema", kPerturbSummarySchema},
                               {"config_hash", hash},
                               {"level", level.level},
                               {"eta", level.eta},
                               {"seed", c.perturbation_seed},
                               {"n_episodes", out.size()},
                               {"ik_failures", failures},
                               {"window", c.window},
                               {"stride", c.stride},
                               {"position_error_cm", to_json(v.position_cm)},
                               {"orientation_error_deg", to_json(v.orientation_deg)}});
  std::ostringstream s;
  s << "perturbed " << out.size() << " episodes at eta " << level.eta << ": position error "
    << detail::fmt(v.position_cm.mean) << " +- " << detail::fmt(v.position_cm.stddev) << " cm, orientation error "
    << detail::fmt(v.orientation_deg.mean) << " +- " << detail::fmt(v.orientation_deg.stddev) << " deg\n";
  return {{data, summary}, s.str()};
}

/// Replays every episode through the chunked executor and classifies the
/// resulting event log.
inline std::vector<Episode> replay_dataset(const PipelineConfig& c, const PipelineInputs& in,
                                           const std::vector<Episode>& eps) {
  std::vector<Episode> out(eps.size());
  parallel_for(eps.size(), c.threads, [&](std::size_t i) {
    ReplayStream stream(eps[i], c.chunk);
    out[i] = execute_chunked(*in.model, TaskWorld::create(in.task, eps[i].metadata.box_init), stream, c.executor(),
                             eps[i].metadata);
  });
  return out;
}

inline CommandResult cmd_eval(const PipelineConfig& c, const fs::path& dataset) {
  const PipelineInputs in = load_inputs(c);
  const std::string hash = config_hash(c, in);
  const std::vector<Episode> eps = detail::read_dataset(dataset);
  const std::vector<Episode> rollouts = replay_dataset(c, in, eps);
  std::vector<Outcome> outcomes(eps.size());
  std::vector<ViolationProfile> profiles(eps.size());
  parallel_for(eps.size(), c.threads, [&](std::size_t i) {
    outcomes[i] = classify_outcome(rollouts[i]);
    profiles[i] = violation_profile(*in.model, eps[i], c.window, c.stride);
  });
  const EvaluationReport r = aggregate_report(profiles, outcomes, c.confidence);
  nlohmann::json j = to_json(r);
  j["config_hash"] = hash;
  j["window"] = c.window;
  j["stride"] = c.stride;
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < eps.size(); ++i) {
    per.push_back({{"index", i},
                   {"seed", eps[i].metadata.seed},
                   {"outcome", to_string(outcomes[i])},
                   {"truncated", rollouts[i].metadata.truncated},
                   {"position_error_cm_mean", profiles[i].pos.mean * 100.0},
                   {"orientation_error_deg_mean", profiles[i].rot.mean * 180.0 / std::numbers::pi}});
  }
  j["episodes"] = std::move(per);

  detail::ensure_dir(c.output_dir);
  const fs::path report = c.output_dir / "eval_report.json";
  detail::write_json(report, j);
  std::ostringstream s;
  s << "outcomes I/II/III/IV: " << r.counts[0] << "/" << r.counts[1] << "/" << r.counts[2] << "/" << r.counts[3]
    << ", success " << detail::fmt(r.success_rate) << " [" << detail::fmt(r.success_ci->first) << ", "
    << detail::fmt(r.success_ci->second) << "], position error " << detail::fmt(r.pos_cm.mean)
    << " cm, orientation error " << detail::fmt(r.rot_deg.mean) << " deg\n";
  return {{report}, s.str()};
}

/// Curvature series along each episode's transport commands, and the
/// relation between curvature, constraint error and outcome.
inline CommandResult cmd_curvature(const PipelineConfig& c, const fs::path& dataset) {
  const PipelineInputs in = load_inputs(c);
  const std::string hash = config_hash(c, in);
  const std::vector<Episode> eps = detail::read_dataset(dataset);
  const std::vector<Episode> rollouts = replay_dataset(c, in, eps);
  const CurvatureOptions opt = c.curvature();
  std::vector<CurvatureSeries> series(eps.size());
  std::vector<ViolationProfile> profiles(eps.size());
  parallel_for(eps.size(), c.threads, [&](std::size_t i) {
    series[i] = rollout_curvature_series(in.model, eps[i], opt);
    profiles[i] = violation_profile(*in.model, eps[i], c.window, c.stride);
  });

  detail::ensure_dir(c.output_dir);
  const fs::path series_path = c.output_dir / "curvature_series.jsonl";
  std::ofstream out(series_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + series_path.string() + "'");

  std::vector<double> pooled_err, pooled_k;
  std::vector<std::vector<double>> k_series(eps.size());
  std::vector<int> category(eps.size(), -1);
  std::array<std::size_t, 4> counts{};
  std::size_t n_samples = 0, n_gaps = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::map<int, double> err;
    for (const WindowRecord& w : profiles[i].windows) {
      for (std::size_t k = 0; k < w.t_index.size(); ++k) err[w.t_index[k]] = w.pos_err[k];
    }
    const Outcome o = classify_outcome(rollouts[i]);
    ++counts[static_cast<std::size_t>(o)];
    nlohmann::json samples = nlohmann::json::array();
    for (const CurvatureSample& s : series[i].samples) {
      const double e = err.at(s.t_index);
      samples.push_back({{"t", s.t_index},
                         {"kretschmann", s.kretschmann},
                         {"residual", s.residual_norm},
                         {"sigma_min", s.sigma_min},
                         {"cond_J", s.cond_j},
                         {"position_error", e}});
      pooled_err.push_back(e);
      pooled_k.push_back(s.kretschmann);
      k_series[i].push_back(s.kretschmann);
    }
    nlohmann::json gaps = nlohmann::json::array();
    for (const CurvatureGap& g : series[i].gaps) {
      gaps.push_back({{"t", g.t_index}, {"sigma_min", g.sigma_min}, {"cond_J", g.cond_j}});
    }
    n_samples += series[i].samples.size();
    n_gaps += series[i].gaps.size();
    if (!k_series[i].empty() && o != Outcome::FullFailure) category[i] = static_cast<int>(o);
    const nlohmann::json rec = {{"schema", kCurvatureSeriesSchema},
                                {"config_hash", hash},
                                {"episode", i},
                                {"seed", eps[i].metadata.seed},
                                {"outcome", to_string(o)},
                                {"anchor_t", series[i].anchor_t},
                                {"samples", std::move(samples)},
                                {"gaps", std::move(gaps)}};
    out << rec.dump() << '\n';
  }
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "write to '" + series_path.string() + "' failed");

  if (2 * n_gaps > n_samples + n_gaps) {
    throw Error(ErrorCode::RankDeficient, std::to_string(n_gaps) + " of " + std::to_string(n_samples + n_gaps) +
                                              " transport knots are rank deficient");
  }

  nlohmann::json a;
  a["schema"] = kCurvatureAnalysisSchema;
  a["config_hash"] = hash;
  a["n_episodes"] = eps.size();
  a["n_samples"] = n_samples;
  a["n_gaps"] = n_gaps;
  nlohmann::json notes = nlohmann::json::array();
  auto guarded = [&](const char* key, auto&& fn) {
    try {
      a[key] = fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSample && e.code() != ErrorCode::InsufficientCategory) throw;
      a[key] = nullptr;
      notes.push_back(std::string(key) + ": " + e.what());
    }
  };
  guarded("pearson", [&] { return pearson(pooled_err, pooled_k); });
  guarded("spearman", [&] { return spearman(pooled_err, pooled_k); });
  guarded("js_mean", [&] { return outcome_conditioned_js(k_series, category, SeriesStatistic::Mean); });
  guarded("js_max", [&] { return outcome_conditioned_js(k_series, category, SeriesStatistic::Max); });
  nlohmann::json cc;
  for (Outcome o : {Outcome::FullSuccess, Outcome::SingleGripper, Outcome::BoxDrop, Outcome::FullFailure}) {
    cc[to_string(o)] = counts[static_cast<std::size_t>(o)];
  }
  a["category_counts"] = cc;
  a["notes"] = notes;
  const fs::path analysis = c.output_dir / "curvature_analysis.json";
  detail::write_json(analysis, a);

  auto show = [&](const char* key) { return a[key].is_null() ? std::string("n/a") : detail::fmt(a[key].get<double>()); };
  std::ostringstream s;
  s << "curvature at " << n_samples << " knots (" << n_gaps << " rank-deficient): pearson " << show("pearson")
    << ", spearman " << show("spearman") << ", JS(mean) " << show("js_mean") << " nats, JS(max) " << show("js_max")
    << " nats\n";
  return {{series_path, analysis}, s.str()};
}

}  // namespace bimanifold
