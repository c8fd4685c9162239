// bimanifold: batch driver for demonstration generation, perturbation,
// evaluation and curvature analysis.
//
//   bimanifold gen --config pipeline.json
//   bimanifold perturb --in out/episodes.jsonl --level 2 --out out/l2
//   bimanifold eval --in out/l2/perturbed.jsonl
//   bimanifold curvature --in out/l2/perturbed.jsonl
//
// Settings come from the built-in defaults, then the config file (--config,
// or $BIMANIFOLD_CONFIG when the flag is absent), then explicit flags.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "bimanifold/pipeline/pipeline.hpp"

namespace {

using namespace bimanifold;

struct Overrides {
  std::optional<std::string> arm_left, arm_right, task_world, distribution, diff_mode, output_dir;
  std::optional<int> n_episodes, level, window, stride, chunk, execute;
  std::optional<std::uint64_t> master_seed, perturb_seed;
  std::optional<double> eta, confidence, fd_step, rank_tolerance;
  std::optional<unsigned> threads;

  void apply(PipelineConfig& c) const {
    if (arm_left) c.arm_left = *arm_left;
    if (arm_right) c.arm_right = *arm_right;
    if (task_world) c.task_world = *task_world;
    if (distribution) c.distribution = *distribution;
    if (n_episodes) c.n_episodes = *n_episodes;
    if (master_seed) c.master_seed = *master_seed;
    if (level) {
      c.perturbation_level = *level;
      c.eta.reset();
    }
    if (eta) c.eta = *eta;
    if (perturb_seed) c.perturbation_seed = *perturb_seed;
    if (window) c.window = *window;
    if (stride) c.stride = *stride;
    if (confidence) c.confidence = *confidence;
    if (chunk) c.chunk = *chunk;
    if (execute) c.execute = *execute;
    if (diff_mode) c.diff_mode = diff_mode_from_string(*diff_mode);
    if (fd_step) c.fd_step = *fd_step;
    if (rank_tolerance) c.rank_tolerance = *rank_tolerance;
    if (output_dir) c.output_dir = *output_dir;
    if (threads) c.threads = *threads;
  }
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--arm-left", o.arm_left, "Left arm model (arm_model_v1 JSON)");
  sub->add_option("--arm-right", o.arm_right, "Right arm model (arm_model_v1 JSON)");
  sub->add_option("--task-world", o.task_world, "Task world (task_world_v1 JSON)");
  sub->add_option("--distribution", o.distribution, "Box placement distribution: train or eval");
  sub->add_option("--window", o.window, "Knots per evaluation window");
  sub->add_option("--stride", o.stride, "Transport knots between window starts (0: same as window)");
  sub->add_option("--confidence", o.confidence, "Wilson interval confidence level");
  sub->add_option("--chunk", o.chunk, "Replay chunk length");
  sub->add_option("--execute", o.execute, "Actions executed per chunk");
  sub->add_option("--out", o.output_dir, "Output directory");
  sub->add_option("-j,--threads", o.threads, "Worker threads (0: all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bimanual transform-lock demonstrations, perturbation and curvature analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::string> config_path;
  app.add_option("-c,--config", config_path, "Pipeline config (pipeline_v1 JSON); default $BIMANIFOLD_CONFIG");

  Overrides o;
  std::string input;

  CLI::App* gen = app.add_subcommand("gen", "Generate scripted demonstrations");
  add_common(gen, o);
  gen->add_option("-n,--n-episodes", o.n_episodes, "Number of demonstrations");
  gen->add_option("--seed", o.master_seed, "Master seed");

  CLI::App* perturb = app.add_subcommand("perturb", "Add OU noise to the subordinate arm during transport");
  add_common(perturb, o);
  perturb->add_option("--in", input, "Input episode dataset (JSONL)")->required();
  perturb->add_option("--level", o.level, "Perturbation level 0-3");
  perturb->add_option("--eta", o.eta, "Raw OU volatility; overrides --level");
  perturb->add_option("--perturb-seed", o.perturb_seed, "Perturbation master seed");

  CLI::App* eval = app.add_subcommand("eval", "Replay episodes and report outcomes and constraint errors");
  add_common(eval, o);
  eval->add_option("--in", input, "Episode dataset (JSONL)")->required();

  CLI::App* curv = app.add_subcommand("curvature", "Curvature series and correlation analysis");
  add_common(curv, o);
  curv->add_option("--in", input, "Episode dataset (JSONL)")->required();
  curv->add_option("--diff-mode", o.diff_mode, "forward-dual or central-fd");
  curv->add_option("--fd-step", o.fd_step, "Finite-difference step");
  curv->add_option("--rank-tol", o.rank_tolerance, "Smallest admissible singular value of the constraint Jacobian");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    PipelineConfig cfg;
    if (!config_path) {
      if (const char* env = std::getenv("BIMANIFOLD_CONFIG"); env && *env) config_path = env;
    }
    if (config_path) cfg = load_pipeline_config(*config_path);
    o.apply(cfg);

    CommandResult r;
    if (gen->parsed()) {
      r = cmd_gen(cfg);
    } else if (perturb->parsed()) {
      r = cmd_perturb(cfg, input);
    } else if (eval->parsed()) {
      r = cmd_eval(cfg, input);
    } else {
      r = cmd_curvature(cfg, input);
    }
    std::cout << r.summary;
    for (const auto& f : r.files) std::cout << "wrote " << f.string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
