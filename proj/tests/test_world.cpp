// Task world, demonstrations, executor, episode files, perturbation, metrics
// and the pipeline commands.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bimanifold/pipeline/pipeline.hpp"
#include "support.hpp"

using namespace bimanifold;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

const BimanualModel& pair_model() {
  static const BimanualModel m = BimanualModel::default_pair();
  return m;
}

std::shared_ptr<const TaskConfig> default_task() {
  static const auto t = std::make_shared<const TaskConfig>();
  return t;
}

/// Clean demonstrations at evaluation placements, built once.
const std::vector<Episode>& clean_dataset() {
  static const std::vector<Episode> eps = [] {
    std::vector<Episode> out;
    const BoxInitDistribution dist = BoxInitDistribution::evaluation();
    for (std::uint64_t i = 0; out.size() < 20; ++i) {
      out.push_back(generate_demonstration(pair_model(), default_task(), sample_box_init(dist, derive_seed(5, i, 0)),
                                           derive_seed(5, i, 1)));
    }
    return out;
  }();
  return eps;
}

Episode replay(const Episode& ep, std::shared_ptr<const TaskConfig> task = default_task(), int chunk = 16,
               int execute = 8) {
  ReplayStream stream(ep, chunk);
  ExecutorConfig cfg;
  cfg.chunk = chunk;
  cfg.execute = execute;
  return execute_chunked(pair_model(), TaskWorld::create(std::move(task), ep.metadata.box_init), stream, cfg,
                         ep.metadata);
}

/// Moves the left flange command of the given knots by a world-frame offset.
Episode shift_left_actions(const Episode& ep, const std::vector<std::size_t>& knots, const Vector3& d) {
  Episode out = ep;
  const ArmModel& arm = pair_model().left;
  for (std::size_t k : knots) {
    EpisodeStep& s = out.steps[k];
    const JointConfig q = s.action.head<kArmDof>();
    s.action.head<kArmDof>() =
        inverse_kinematics(arm, make_translation(d) * forward_kinematics(arm, q), sew_angle(arm, q), ik_branch(arm, q));
  }
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("bimanifold_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

// ------------------------------------------------------------- box placement

TEST(BoxInit, TrainingSamplesStayInRangeAndCentered) {
  const BoxInitDistribution d = BoxInitDistribution::training();
  constexpr int n = 100000;
  double sx = 0, sy = 0, st = 0;
  for (int i = 0; i < n; ++i) {
    const BoxInit b = sample_box_init(d, derive_seed(99, static_cast<std::uint64_t>(i)));
    ASSERT_GE(b.x, -0.2);
    ASSERT_LT(b.x, 0.2);
    ASSERT_GE(b.y, 0.55);
    ASSERT_LT(b.y, 0.65);
    ASSERT_GE(b.theta, -kPi / 8);
    ASSERT_LT(b.theta, kPi / 8);
    sx += b.x;
    sy += b.y;
    st += b.theta;
  }
  // Standard error of a uniform mean: width / sqrt(12 n).
  const auto se = [&](double w) { return w / std::sqrt(12.0 * n); };
  EXPECT_LE(std::abs(sx / n - 0.0), 3 * se(0.4));
  EXPECT_LE(std::abs(sy / n - 0.6), 3 * se(0.1));
  EXPECT_LE(std::abs(st / n - 0.0), 3 * se(kPi / 4));
}

TEST(BoxInit, DegenerateRangesRejectedAndSeedsRepeat) {
  EXPECT_THROW(BoxInitDistribution({0.1, 0.1}, {0.5, 0.6}, {0, 1}), Error);
  EXPECT_THROW(BoxInitDistribution({0.0, 0.1}, {0.6, 0.5}, {0, 1}), Error);
  const BoxInitDistribution d = BoxInitDistribution::evaluation();
  EXPECT_EQ(sample_box_init(d, 1234), sample_box_init(d, 1234));
  EXPECT_FALSE(sample_box_init(d, 1234) == sample_box_init(d, 1235));
}

// ------------------------------------------------------------- demonstrations

TEST(Demonstration, CenterPlacementIsFullSuccessWithExactLock) {
  const Episode ep = generate_demonstration(pair_model(), default_task(), {0.0, 0.6, 0.0}, 3);
  ASSERT_TRUE(ep.events);
  ASSERT_EQ(ep.events->size(), 3u);
  EXPECT_EQ((*ep.events)[0].kind, EventKind::GraspAttach);
  EXPECT_EQ((*ep.events)[0].arm, ArmSide::Left);
  EXPECT_EQ((*ep.events)[1].kind, EventKind::GraspAttach);
  EXPECT_EQ((*ep.events)[1].arm, ArmSide::Right);
  EXPECT_EQ((*ep.events)[2].kind, EventKind::Placed);
  EXPECT_EQ(classify_outcome(ep), Outcome::FullSuccess);
  const ViolationProfile p = violation_profile(pair_model(), ep);
  EXPECT_LE(p.pos.max, 1e-10);
  EXPECT_LE(p.rot.max, 1e-6);
}

TEST(Demonstration, StructureOfCleanEpisodes) {
  for (const Episode& ep : clean_dataset()) {
    // Phases appear in script order, each as one contiguous block.
    std::vector<Phase> order;
    for (const EpisodeStep& s : ep.steps) {
      if (order.empty() || order.back() != s.phase) order.push_back(s.phase);
    }
    EXPECT_EQ(order, (std::vector<Phase>{Phase::Approach, Phase::Grasp, Phase::Transport, Phase::Release,
                                         Phase::Retreat}));
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const EpisodeStep& s = ep.steps[t];
      EXPECT_EQ(s.t_index, static_cast<int>(t));
      if (s.phase == Phase::Transport) EXPECT_TRUE(s.lock_active);
      if (s.phase == Phase::Approach || s.phase == Phase::Retreat) EXPECT_FALSE(s.lock_active);
      EXPECT_EQ(s.observation, ep.steps[t == 0 ? 0 : t - 1].action);
      const BimanualState st = to_state(s.action);
      EXPECT_TRUE(pair_model().left.within_limits(st.q_left));
      EXPECT_TRUE(pair_model().right.within_limits(st.q_right));
    }
    for (std::size_t i = 1; i < ep.events->size(); ++i) {
      EXPECT_LE((*ep.events)[i - 1].t_index, (*ep.events)[i].t_index);
    }
    EXPECT_EQ(classify_outcome(ep), Outcome::FullSuccess);
    const ViolationProfile p = violation_profile(pair_model(), ep);
    EXPECT_LE(p.pos.max, 1e-10);
    EXPECT_LE(p.rot.max, 1e-6);
  }
}

TEST(Demonstration, DeterministicAndSeedSensitive) {
  const BoxInit init{0.05, 0.59, 0.1};
  const std::string a = episode_to_line(generate_demonstration(pair_model(), default_task(), init, 17));
  const std::string b = episode_to_line(generate_demonstration(pair_model(), default_task(), init, 17));
  const std::string c = episode_to_line(generate_demonstration(pair_model(), default_task(), init, 18));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Demonstration, FarBoxIsUnreachable) {
  EXPECT_EQ(code_of([] { generate_demonstration(pair_model(), default_task(), {2.0, 0.6, 0.0}, 1); }),
            ErrorCode::UnreachableGrasp);
  EXPECT_EQ(code_of([] { generate_demonstration(pair_model(), default_task(), {0.0, 2.6, 0.0}, 1); }),
            ErrorCode::UnreachableGrasp);
}

// ------------------------------------------------------------------ world

TEST(World, GripperNeverClosedGivesNoEvents) {
  Episode ep = clean_dataset().front();
  for (EpisodeStep& s : ep.steps) s.action(14) = s.action(15) = 0.0;
  const Episode out = replay(ep);
  ASSERT_TRUE(out.events);
  EXPECT_TRUE(out.events->empty());
  EXPECT_EQ(classify_outcome(out), Outcome::FullFailure);
}

TEST(World, LeftGripperDisplacedLateInTransportDetachesWithoutDrop) {
  const Episode& clean = clean_dataset().front();
  const std::vector<std::size_t> tr = clean.steps_in_phase(Phase::Transport);
  // Twice the retention distance, for the last few transport knots.
  const double d = 2 * default_task()->thresholds.retain_pos;
  const std::vector<std::size_t> late(tr.end() - 6, tr.end());
  const Episode ep = shift_left_actions(clean, late, {0.0, 0.0, d});

  auto task = std::make_shared<TaskConfig>();
  for (double slip : {0.0, task->single_grip_slip_rate}) {
    task->single_grip_slip_rate = slip;
    const Episode out = replay(ep, task);
    ASSERT_TRUE(out.events);
    bool left_detach = false, drop = false;
    for (const Event& e : *out.events) {
      left_detach |= e.kind == EventKind::GraspDetach && e.arm == ArmSide::Left;
      drop |= e.kind == EventKind::BoxDrop;
      EXPECT_FALSE(e.kind == EventKind::GraspDetach && e.arm == ArmSide::Right);
    }
    EXPECT_TRUE(left_detach) << "slip rate " << slip;
    EXPECT_FALSE(drop) << "slip rate " << slip;
    EXPECT_EQ(classify_outcome(out), Outcome::SingleGripper) << "slip rate " << slip;
  }
}

TEST(World, BothGrippersOpenedMidAirDropsTheBox) {
  Episode ep = clean_dataset().front();
  const std::vector<std::size_t> tr = ep.steps_in_phase(Phase::Transport);
  for (std::size_t t = tr[tr.size() / 2]; t < ep.steps.size(); ++t) ep.steps[t].action(14) = ep.steps[t].action(15) = 0;
  const Episode out = replay(ep);
  EXPECT_EQ(out.events->back().kind, EventKind::BoxDrop);
  EXPECT_EQ(classify_outcome(out), Outcome::BoxDrop);
}

TEST(World, LargerRetentionThresholdsNeverTurnSuccessIntoFailure) {
  const std::vector<Episode> noisy =
      perturb_dataset(pair_model(), clean_dataset(), PerturbationLevel::from_eta(0.004), 8, {}, 1);
  int successes_small = 0, successes_large = 0;
  for (const Episode& ep : noisy) {
    std::vector<bool> ok;
    for (double scale : {0.5, 1.0, 2.0, 4.0}) {
      auto task = std::make_shared<TaskConfig>();
      task->thresholds.retain_pos *= scale;
      task->thresholds.retain_rot *= scale;
      ok.push_back(is_success(classify_outcome(replay(ep, task))));
    }
    for (std::size_t i = 1; i < ok.size(); ++i) EXPECT_TRUE(!ok[i - 1] || ok[i]);
    successes_small += ok.front();
    successes_large += ok.back();
  }
  // The sweep is informative: the thresholds matter for this data.
  EXPECT_LT(successes_small, successes_large);
}

// ---------------------------------------------------------------- executor

TEST(Executor, ReplayReproducesKnotsAndEvents) {
  for (const Episode& ep : clean_dataset()) {
    for (auto [chunk, execute] : {std::pair{16, 8}, std::pair{1, 1}, std::pair{5, 3}}) {
      const Episode out = replay(ep, default_task(), chunk, execute);
      ASSERT_EQ(out.steps.size(), ep.steps.size());
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        EXPECT_LE((out.steps[t].observation - ep.steps[t].observation).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((out.steps[t].action - ep.steps[t].action).cwiseAbs().maxCoeff(), 1e-12);
      }
      EXPECT_EQ(*out.events, *ep.events);
      EXPECT_FALSE(out.metadata.truncated);
    }
  }
}

TEST(Executor, FirstOrderHold) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 50; ++k) {
    Vec16 a, b;
    for (int i = 0; i < 16; ++i) {
      a(i) = uniform(rng, -2, 2);
      b(i) = uniform(rng, -2, 2);
    }
    for (int i = 0; i <= 5; ++i) EXPECT_EQ(first_order_hold(a, a, i, 5), a);
    EXPECT_LE((first_order_hold(a, b, 2, 4) - (a + b) / 2).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(first_order_hold(a, b, 0, 4), a);
    EXPECT_LE((first_order_hold(a, b, 4, 4) - b).cwiseAbs().maxCoeff(), 1e-15);
  }
}

namespace {

/// Emits the demonstration's actions, then runs dry.
class FailingStream final : public ActionStream {
 public:
  FailingStream(const Episode& ep, int stop) : ep_(ep), stop_(stop) {}
  Vec16 initial_observation() const override { return ep_.steps.front().observation; }
  std::optional<std::vector<ChunkAction>> next_chunk(const Vec16&, const Vec16&, int t) override {
    if (t >= stop_) throw Error(ErrorCode::StreamExhausted, "no more actions");
    std::vector<ChunkAction> out;
    for (int i = t; i < t + 16; ++i) out.push_back({ep_.steps[static_cast<std::size_t>(i)].action, Phase::Approach, false});
    return out;
  }

 private:
  const Episode& ep_;
  int stop_;
};

}  // namespace

TEST(Executor, ExhaustedStreamTruncatesEpisode) {
  const Episode& ep = clean_dataset().front();
  FailingStream s(ep, 24);
  const Episode out = execute_chunked(pair_model(), TaskWorld::create(default_task(), ep.metadata.box_init), s);
  EXPECT_TRUE(out.metadata.truncated);
  EXPECT_EQ(out.steps.size(), 24u);
}

// ----------------------------------------------------------- episode files

TEST(EpisodeFile, RoundTripIsExact) {
  TempDir dir("io");
  std::vector<Episode> eps;
  const BoxInitDistribution dist = BoxInitDistribution::training();
  for (std::uint64_t i = 0; eps.size() < 50; ++i) {
    try {
      eps.push_back(generate_demonstration(pair_model(), default_task(), sample_box_init(dist, derive_seed(21, i)), i));
    } catch (const Error&) {
    }
  }
  eps[3] = perturb_episode(pair_model(), eps[3], PerturbationLevel::from_level(2), 77);
  eps[4].metadata.config_hash = "0123456789abcdef";
  const fs::path f = dir.path / "eps.jsonl";
  write_episodes(f, eps);
  const std::vector<Episode> back = read_episodes(f);
  ASSERT_EQ(back.size(), eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) EXPECT_TRUE(back[i] == eps[i]) << "episode " << i;
  EXPECT_FALSE(back[3].events.has_value());
}

TEST(EpisodeFile, TruncatedLineAndUnknownSchema) {
  TempDir dir("io_bad");
  const fs::path f = dir.path / "eps.jsonl";
  write_episodes(f, {clean_dataset()[0], clean_dataset()[1], clean_dataset()[2]});
  std::string text = slurp(f);
  text.resize(text.size() - 40);
  std::ofstream(f, std::ios::binary | std::ios::trunc) << text;
  try {
    read_episodes(f);
    FAIL();
  } catch (const MalformedRecordError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }

  nlohmann::json j = episode_to_json(clean_dataset()[0]);
  j["schema_version"] = "v999";
  std::ofstream(f, std::ios::binary | std::ios::trunc) << j.dump() << "\n";
  EXPECT_EQ(code_of([&] { read_episodes(f); }), ErrorCode::SchemaMismatch);
  EXPECT_EQ(code_of([&] { read_episodes(dir.path / "missing.jsonl"); }), ErrorCode::IoError);
}

// ------------------------------------------------------------- perturbation

TEST(OuPath, ZeroVolatilityAndExactLinearity) {
  OuParams p;
  for (const Vector6& z : ou_path(p, 200, 5)) EXPECT_EQ(z, Vector6::Zero());
  p.eta = 0.001;
  const std::vector<Vector6> a = ou_path(p, 300, 9);
  for (double c : {2.0, 2.5, 5.0}) {
    OuParams q = p;
    q.eta = c * p.eta;
    const std::vector<Vector6> b = ou_path(q, 300, 9);
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (int i = 0; i < 6; ++i) EXPECT_NEAR(b[k](i), c * a[k](i), 1e-15 * std::max(1.0, std::abs(b[k](i))));
    }
  }
  // Recursion checked step by step against an independent normal stream.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Vector6 z = Vector6::Zero();
  for (std::size_t k = 1; k < a.size(); ++k) {
    for (int i = 0; i < 3; ++i) z(i) = 0.99 * z(i) + 0.001 * normal(rng);
    for (int i = 3; i < 6; ++i) z(i) = 0.99 * z(i) + 0.001 * p.rotation_scale * normal(rng);
    EXPECT_LE((a[k] - z).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(OuPath, InvalidParameters) {
  OuParams p;
  p.alpha = 1.0;
  EXPECT_THROW(ou_path(p, 3, 1), Error);
  p = {};
  p.eta = -1;
  EXPECT_THROW(ou_path(p, 3, 1), Error);
  p = {};
  p.dt = 0;
  EXPECT_THROW(ou_path(p, 3, 1), Error);
}

TEST(Perturb, LevelZeroIsIdentity) {
  for (const Episode& ep : clean_dataset()) {
    EXPECT_TRUE(perturb_episode(pair_model(), ep, PerturbationLevel::from_level(0), 3) == ep);
  }
  const ViolationSummary v = dataset_violation_summary(pair_model(), clean_dataset());
  EXPECT_LE(v.position_cm.mean, 1e-8);
  EXPECT_LE(v.orientation_deg.mean, 1e-4);
}

TEST(Perturb, TouchesOnlySubordinateTransportCommands) {
  for (const Episode& ep : clean_dataset()) {
    const Episode out = perturb_episode(pair_model(), ep, PerturbationLevel::from_level(3), 4);
    ASSERT_EQ(out.steps.size(), ep.steps.size());
    int changed = 0;
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const EpisodeStep &a = ep.steps[t], &b = out.steps[t];
      EXPECT_EQ(a.observation, b.observation);
      EXPECT_EQ(a.phase, b.phase);
      EXPECT_EQ(a.lock_active, b.lock_active);
      if (a.phase != Phase::Transport) {
        EXPECT_EQ(a.action, b.action);
      } else {
        EXPECT_EQ(a.action.segment<kArmDof>(kArmDof), b.action.segment<kArmDof>(kArmDof));
        EXPECT_EQ(a.action.tail<2>(), b.action.tail<2>());
        changed += a.action != b.action;
      }
    }
    EXPECT_GT(changed, 0);
    EXPECT_EQ(out.metadata.perturbation_level, 3);
    EXPECT_EQ(out.metadata.eta, 0.005);
    EXPECT_EQ(out.metadata.perturbation_seed, 4u);
    EXPECT_FALSE(out.events.has_value());
    EXPECT_TRUE(perturb_episode(pair_model(), ep, PerturbationLevel::from_level(3), 4) == out);
  }
}

TEST(Perturb, DisplacementScalesWithVolatility) {
  const Episode& ep = clean_dataset().front();
  const std::vector<std::size_t> tr = ep.steps_in_phase(Phase::Transport);
  OuParams p1;
  p1.rotation_scale = kDefaultRotationScale;
  p1.eta = PerturbationLevel::from_level(1).eta;
  OuParams p3 = p1;
  p3.eta = PerturbationLevel::from_level(3).eta;
  const std::vector<Vector6> z1 = ou_path(p1, tr.size(), 6), z3 = ou_path(p3, tr.size(), 6);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    const Pose flange = forward_kinematics(pair_model().left, to_state(ep.steps[tr[k]].action).q_left);
    const Pose a = apply_perturbation(flange, z1[k]), b = apply_perturbation(flange, z3[k]);
    const double d1 = (a.translation - flange.translation).norm(), d3 = (b.translation - flange.translation).norm();
    EXPECT_NEAR(d3 / d1, 5.0, 1e-12);
    EXPECT_NEAR(geodesic_distance(flange.rotation, b.rotation) / geodesic_distance(flange.rotation, a.rotation), 5.0,
                1e-9);
  }
  // The offset is expressed in the gripper frame.
  Vector6 z;
  z << 0.01, 0, 0, 0, 0, 0;
  const Pose flange = make_pose(Rotation::from_rpy(0, 0, kPi / 2), {1, 2, 3});
  EXPECT_LE((apply_perturbation(flange, z).translation - Vector3(1, 2.01, 3)).norm(), 1e-15);
}

TEST(Perturb, OneEpisodeDatasetMatchesItsOwnProfile) {
  const Episode ep = perturb_episode(pair_model(), clean_dataset()[2], PerturbationLevel::from_level(2), 11);
  const ViolationSummary v = dataset_violation_summary(pair_model(), {ep});
  const ViolationProfile p = violation_profile(pair_model(), ep);
  EXPECT_NEAR(v.position_cm.mean, 100 * p.pos.mean, 1e-12);
  EXPECT_NEAR(v.orientation_deg.mean, 180 / kPi * p.rot.mean, 1e-10);
  EXPECT_EQ(code_of([] { dataset_violation_summary(pair_model(), {}); }), ErrorCode::EmptyDataset);
}

TEST(Perturb, DatasetSeedsIndependentOfThreads) {
  const auto a = perturb_dataset(pair_model(), clean_dataset(), PerturbationLevel::from_level(2), 31, {}, 1);
  const auto b = perturb_dataset(pair_model(), clean_dataset(), PerturbationLevel::from_level(2), 31, {}, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i] == b[i]);
}

TEST(Perturb, RequiresTransportPhase) {
  Episode ep = clean_dataset().front();
  for (EpisodeStep& s : ep.steps) s.phase = Phase::Approach;
  EXPECT_EQ(code_of([&] { perturb_episode(pair_model(), ep, PerturbationLevel::from_level(1), 1); }),
            ErrorCode::NoTransportPhase);
  EXPECT_EQ(code_of([&] { violation_profile(pair_model(), ep); }), ErrorCode::NoTransportPhase);
  EXPECT_THROW(PerturbationLevel::from_level(4), Error);
}

// ----------------------------------------------------------------- metrics

TEST(ViolationProfile, ConstantOffsetInsideWindow) {
  const Episode& clean = clean_dataset().front();
  const std::vector<std::size_t> tr = clean.steps_in_phase(Phase::Transport);
  const std::vector<std::size_t> mid(tr.begin() + 4, tr.begin() + 12);
  const Episode ep = shift_left_actions(clean, mid, {0.003, 0.0, 0.0});
  const ViolationProfile p = violation_profile(pair_model(), ep, 16, 16);
  ASSERT_GE(p.windows.size(), 1u);
  const WindowRecord& w = p.windows.front();
  ASSERT_EQ(w.pos_err.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) {
    const double expect = i >= 4 && i < 12 ? 0.003 : 0.0;
    EXPECT_NEAR(w.pos_err[i], expect, 1e-10) << "knot " << i;
    EXPECT_LE(w.rot_err[i], 1e-9) << "knot " << i;
  }
}

TEST(ViolationProfile, WindowLayout) {
  const Episode ep = perturb_episode(pair_model(), clean_dataset()[1], PerturbationLevel::from_level(2), 2);
  const std::size_t n = ep.steps_in_phase(Phase::Transport).size();
  const ViolationProfile overlap = violation_profile(pair_model(), ep, 16, 8);
  const ViolationProfile partition = violation_profile(pair_model(), ep, 16, 0);
  EXPECT_EQ(overlap.windows.size(), (n + 7) / 8);
  EXPECT_EQ(partition.windows.size(), (n + 15) / 16);
  EXPECT_EQ(partition.all_pos().size(), n);
  for (const ViolationProfile* p : {&overlap, &partition}) {
    for (const WindowRecord& w : p->windows) {
      EXPECT_EQ(w.pos_err.front(), w.pos_err.front());
      for (double e : w.pos_err) EXPECT_GE(e, 0.0);
      // Reference is the relative transform at the window's first observation.
      const auto& step = ep.steps[static_cast<std::size_t>(w.window_start_t)];
      const PoseError d = pose_distance(w.reference_rel, relative_transform(pair_model(), to_state(step.observation)));
      EXPECT_EQ(d.position, 0.0);
    }
    const ErrorStats s = ErrorStats::of(p->all_pos());
    EXPECT_EQ(s.mean, p->pos.mean);
    EXPECT_EQ(s.max, p->pos.max);
  }
  // Clean data scored one knot at a time: the reference is the previous command.
  const ViolationProfile one = violation_profile(pair_model(), clean_dataset()[1], 1, 1);
  EXPECT_LE(one.pos.max, 1e-10);
  EXPECT_LE(one.rot.max, 1e-6);
  EXPECT_THROW(violation_profile(pair_model(), ep, 0, 1), Error);
}

TEST(ViolationProfile, InvariantUnderRigidWorldMotion) {
  const Pose g = make_pose(Rotation::from_rpy(0.3, -0.7, 1.9), {2.0, -1.0, 0.4});
  const BimanualModel moved{pair_model().left.with_base(g * pair_model().left.base_pose()),
                            pair_model().right.with_base(g * pair_model().right.base_pose())};
  for (int i = 0; i < 5; ++i) {
    const Episode ep = perturb_episode(pair_model(), clean_dataset()[static_cast<std::size_t>(i)],
                                       PerturbationLevel::from_level(3), 50 + static_cast<std::uint64_t>(i));
    const ViolationProfile a = violation_profile(pair_model(), ep), b = violation_profile(moved, ep);
    const std::vector<double> pa = a.all_pos(), pb = b.all_pos(), ra = a.all_rot(), rb = b.all_rot();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t k = 0; k < pa.size(); ++k) {
      EXPECT_NEAR(pa[k], pb[k], 1e-12);
      EXPECT_NEAR(ra[k], rb[k], 1e-12);
    }
  }
}

TEST(Outcome, ClassificationRules) {
  using K = EventKind;
  const Event al{1, K::GraspAttach, ArmSide::Left}, ar{1, K::GraspAttach, ArmSide::Right};
  const Event dl{5, K::GraspDetach, ArmSide::Left}, dr{6, K::GraspDetach, ArmSide::Right};
  const Event placed{9, K::Placed, std::nullopt}, drop{7, K::BoxDrop, std::nullopt};
  EXPECT_EQ(classify_events({al, ar, placed}), Outcome::FullSuccess);
  EXPECT_EQ(classify_events({al, ar, dl, placed}), Outcome::SingleGripper);
  EXPECT_EQ(classify_events({al, ar, dl, dr, drop}), Outcome::BoxDrop);
  EXPECT_EQ(classify_events({al, ar, dl, drop}), Outcome::BoxDrop);
  EXPECT_EQ(classify_events({}), Outcome::FullFailure);
  EXPECT_EQ(classify_events({al, ar}), Outcome::FullFailure);
  EXPECT_TRUE(is_success(Outcome::FullSuccess));
  EXPECT_TRUE(is_success(Outcome::SingleGripper));
  EXPECT_FALSE(is_success(Outcome::BoxDrop));
  EXPECT_FALSE(is_success(Outcome::FullFailure));
  Episode ep;
  ep.events.reset();
  EXPECT_EQ(code_of([&] { classify_outcome(ep); }), ErrorCode::MissingEventLog);
}

TEST(Wilson, ClosedFormAndEdges) {
  // Independent evaluation with the tabulated 97.5% normal quantile.
  const auto oracle = [](double k, double n, double z) {
    const double p = k / n, d = 1 + z * z / n;
    const double c = (p + z * z / (2 * n)) / d;
    const double h = z / d * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
    return std::pair{c - h, c + h};
  };
  const auto [lo, hi] = wilson_interval(50, 100);
  EXPECT_NEAR(lo, 0.4038, 1e-3);
  EXPECT_NEAR(hi, 0.5962, 1e-3);
  for (auto [k, n] : {std::pair{50, 100}, std::pair{3, 17}, std::pair{190, 200}, std::pair{1, 2}}) {
    const auto o = oracle(k, n, 1.959964);
    const auto w = wilson_interval(k, n);
    EXPECT_NEAR(w.first, o.first, 1e-6);
    EXPECT_NEAR(w.second, o.second, 1e-6);
  }
  for (long long n : {1, 7, 200}) {
    EXPECT_EQ(wilson_interval(0, n).first, 0.0);
    EXPECT_EQ(wilson_interval(n, n).second, 1.0);
  }
  const auto width = [](long long k, long long n) {
    const auto w = wilson_interval(k, n);
    return w.second - w.first;
  };
  EXPECT_NEAR(width(200, 400) / width(50, 100), 0.5, 0.025);
  EXPECT_EQ(code_of([] { wilson_interval(5, 0); }), ErrorCode::InvalidCounts);
  EXPECT_EQ(code_of([] { wilson_interval(6, 5); }), ErrorCode::InvalidCounts);
  EXPECT_EQ(code_of([] { wilson_interval(-1, 5); }), ErrorCode::InvalidCounts);
}

TEST(Report, CountsAndIdempotence) {
  const EvaluationReport empty = aggregate_report({}, {});
  EXPECT_EQ(empty.n_episodes, 0u);
  EXPECT_FALSE(empty.success_ci.has_value());
  EXPECT_TRUE(to_json(empty)["success_wilson"].is_null());

  std::vector<ViolationProfile> profiles;
  std::vector<Outcome> outcomes;
  for (const Episode& ep : clean_dataset()) {
    profiles.push_back(violation_profile(pair_model(), ep));
    outcomes.push_back(classify_outcome(ep));
  }
  outcomes.push_back(Outcome::BoxDrop);
  const EvaluationReport r = aggregate_report(profiles, outcomes);
  EXPECT_EQ(r.counts[0] + r.counts[1] + r.counts[2] + r.counts[3], outcomes.size());
  EXPECT_EQ(r.counts[0], clean_dataset().size());
  EXPECT_EQ(r.counts[2], 1u);
  EXPECT_LE(r.pos_cm.mean, 1e-8);
  EXPECT_EQ(to_json(r).dump(), to_json(aggregate_report(profiles, outcomes)).dump());
}

// ------------------------------------------------------------ configuration

TEST(TaskConfigFile, RoundTripAndUnknownKeys) {
  TaskConfig c;
  c.thresholds.retain_pos = 0.02;
  c.script.move_knots = 30;
  c.script.branch_left.elbow_flip = true;
  c.control_arm = ArmSide::Left;
  const nlohmann::json j = task_config_to_json(c);
  EXPECT_EQ(task_config_to_json(task_config_from_json(j)).dump(), j.dump());

  nlohmann::json bad = j;
  bad["thresholds"]["retain_pos_m"] = 0.1;
  EXPECT_EQ(code_of([&] { task_config_from_json(bad); }), ErrorCode::ConfigError);
  bad = j;
  bad["schema"] = "task_world_v2";
  EXPECT_EQ(code_of([&] { task_config_from_json(bad); }), ErrorCode::SchemaMismatch);
  nlohmann::json minimal = {{"schema", "task_world_v1"}};
  EXPECT_EQ(task_config_to_json(task_config_from_json(minimal)).dump(), task_config_to_json(TaskConfig{}).dump());
}

TEST(PipelineConfigFile, ParsesAndRejects) {
  const nlohmann::json j = {{"schema", "pipeline_v1"},
                            {"generation", {{"n_episodes", 7}, {"master_seed", 3}}},
                            {"metrics", {{"window", 8}, {"stride", 4}}}};
  const PipelineConfig c = pipeline_config_from_json(j, "/tmp");
  EXPECT_EQ(c.n_episodes, 7);
  EXPECT_EQ(c.master_seed, 3u);
  EXPECT_EQ(c.window, 8);
  EXPECT_EQ(c.stride, 4);
  nlohmann::json bad = j;
  bad["generation"]["episodes"] = 3;
  EXPECT_EQ(code_of([&] { pipeline_config_from_json(bad, "/tmp"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { load_pipeline_config("/nonexistent/pipeline.json"); }), ErrorCode::IoError);
  EXPECT_EQ(exit_code_for(ErrorCode::ConfigError), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::SchemaMismatch), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::RankDeficient), 4);
}

TEST(Pipeline, GenerationIsThreadCountIndependent) {
  TempDir a("gen_a"), b("gen_b");
  PipelineConfig c;
  c.n_episodes = 6;
  c.master_seed = 12;
  c.output_dir = a.path;
  c.threads = 1;
  cmd_gen(c);
  c.output_dir = b.path;
  c.threads = 3;
  cmd_gen(c);
  for (const char* f : {"episodes.jsonl", "gen_manifest.json"}) {
    EXPECT_EQ(slurp(a.path / f), slurp(b.path / f)) << f;
  }
  const std::vector<Episode> eps = read_episodes(a.path / "episodes.jsonl");
  ASSERT_EQ(eps.size(), 6u);
  const nlohmann::json m = nlohmann::json::parse(slurp(a.path / "gen_manifest.json"));
  for (const Episode& ep : eps) EXPECT_EQ(ep.metadata.config_hash, m["config_hash"].get<std::string>());
  // Settings that do not change the data do not change the hash.
  PipelineConfig d = c;
  d.threads = 7;
  d.output_dir = "elsewhere";
  const PipelineInputs in = load_inputs(c);
  EXPECT_EQ(config_hash(c, in), config_hash(d, in));
  d.master_seed = 13;
  EXPECT_NE(config_hash(c, in), config_hash(d, in));
}
