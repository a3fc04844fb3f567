// panolayout: synthetic panoramic layout experiments.
//
// Subcommands: generate-data, train, evaluate, ablate, verify.
// Exit codes: 0 success, 1 validation failure, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "panolayout/commands.hpp"
#include "panolayout/config.hpp"

namespace {

using panolayout::ExperimentConfig;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (key = value lines)");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "override the output directory");
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig cfg = args.config_path.empty() ? ExperimentConfig{}
                                                  : panolayout::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  panolayout::validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic panoramic room-layout experiments"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, ablate_args;
  bool force = false, resume = false;
  std::string checkpoint, split = "test";

  CLI::App* gen = app.add_subcommand("generate-data", "render the synthetic dataset");
  add_common(gen, gen_args);
  gen->add_flag("--force", force, "overwrite a non-empty dataset directory");

  CLI::App* train = app.add_subcommand("train", "run semi-supervised training");
  add_common(train, train_args);
  train->add_flag("--resume", resume, "continue from the last checkpoint in the output dir");

  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
  add_common(evaluate, eval_args);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  evaluate->add_option("--split", split, "train | val | test");

  CLI::App* ablate = app.add_subcommand("ablate", "run the four perturbation-routing modes");
  add_common(ablate, ablate_args);

  app.add_subcommand("verify", "run the invariant self-check suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      panolayout::cmd_generate(resolve(gen_args), force);
      std::printf("dataset written to %s\n", resolve(gen_args).dataset_dir.c_str());
    } else if (train->parsed()) {
      const auto files = panolayout::cmd_train(resolve(train_args), resume);
      std::printf("training done; best val iou3d=%.4f (%s at iteration %lld)\n", files.best.iou3d,
                  files.best.teacher ? "teacher" : "student",
                  static_cast<long long>(files.best.iteration));
      std::printf("history:  %s\nsummary:  %s\nbest:     %s\n", files.history.string().c_str(),
                  files.summary_text.string().c_str(), files.best_checkpoint.string().c_str());
    } else if (evaluate->parsed()) {
      panolayout::cmd_evaluate(resolve(eval_args), checkpoint, split, std::cout);
    } else if (ablate->parsed()) {
      panolayout::cmd_ablate(resolve(ablate_args), std::cout);
    } else {
      return panolayout::cmd_verify(std::cout) == 0 ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
