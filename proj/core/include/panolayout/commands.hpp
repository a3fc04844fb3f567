#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "panolayout/config.hpp"
#include "panolayout/metrics.hpp"
#include "panolayout/trainer.hpp"

namespace panolayout {

// Experiment commands behind the CLI. Throws std::invalid_argument for
// validation problems and std::runtime_error for runtime failures; the CLI
// maps those to exit codes 1 and 2.

// Renders the synthetic dataset into cfg.dataset_dir.
void cmd_generate(const ExperimentConfig& cfg, bool force);

struct TrainResultFiles {
  std::filesystem::path history;
  std::filesystem::path summary_text;
  std::filesystem::path summary_csv;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  BestRecord best;
  MetricsReport final_student;
  MetricsReport final_teacher;
};

TrainResultFiles cmd_train(const ExperimentConfig& cfg, bool resume);

struct EvaluateResult {
  MetricsReport student;
  MetricsReport teacher;
  bool teacher_better = false;
};

EvaluateResult cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                            const std::string& split_name, std::ostream& out);

struct AblateRow {
  AblationMode mode;
  MetricsReport test;
};

struct AblateResult {
  std::vector<AblateRow> rows;  // none, image_only, naive_both, collaborative
};

AblateResult cmd_ablate(const ExperimentConfig& cfg, std::ostream& out);

// Runs the invariant suite; returns the number of failed checks.
int cmd_verify(std::ostream& out);

// Helpers shared with tests.
std::string metrics_history_line(const EvalRecord& rec);
void save_train_checkpoint(const std::filesystem::path& path, const TrainState& st);
void load_train_checkpoint(const std::filesystem::path& path, TrainState& st);

}  // namespace panolayout
