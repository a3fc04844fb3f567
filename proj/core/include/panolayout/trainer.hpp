#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include "panolayout/augment.hpp"
#include "panolayout/dataset.hpp"
#include "panolayout/feature_mask.hpp"
#include "panolayout/losses.hpp"
#include "panolayout/metrics.hpp"
#include "panolayout/model.hpp"

namespace panolayout {

// Unlabeled-branch routing. Collaborative keeps the feature mask on the
// weakly-augmented branch only and the photometric strong augmentation on the
// other branch, so the two intense perturbations never stack.
enum class AblationMode { None, ImageOnly, NaiveBoth, Collaborative };
AblationMode ablation_mode_from(std::string_view name);
const char* to_string(AblationMode mode);

struct TrainerConfig {
  double ema_decay = 0.999;
  AdamConfig adam;
  int batch_labeled = 4;
  int batch_unlabeled = 4;
  std::int64_t total_iters = 2000;
  std::int64_t eval_interval = 100;
  RampSchedule ramp;
  double lambda_max = 1.0;
  AblationMode mode = AblationMode::Collaborative;
  std::uint64_t seed = 1;
  LossWeights loss_w;
  MaskConfig mask;
  StrongAugParams strong;
  RasterConfig raster;
};

TrainerConfig trainer_config_from(const ExperimentConfig& cfg);

struct IterationStats {
  double loss_sup = 0.0;
  double loss_con = 0.0;
  double loss_total = 0.0;
  double lambda = 0.0;
  bool skipped = false;
};

struct EvalRecord {
  std::int64_t iteration = 0;
  double lambda = 0.0;
  IterationStats last;  // losses from the most recent iteration
  MetricsReport student;
  MetricsReport teacher;
};

struct BestRecord {
  double iou3d = -1.0;
  double rmse = std::numeric_limits<double>::infinity();
  std::int64_t iteration = -1;
  bool teacher = false;  // which of the two models won

  bool improved_by(double cand_iou3d, double cand_rmse) const {
    if (cand_iou3d != iou3d) return cand_iou3d > iou3d;
    return cand_rmse < rmse;
  }
};

struct TrainState {
  Model model;        // student
  ParamStore teacher;  // EMA copy, gradients stay zero
  AdamState adam;
  std::int64_t iteration = 0;
  BestRecord best;
  int consecutive_failures = 0;

  TrainState(const ModelConfig& cfg, std::uint64_t model_seed);
};

// theta_T <- alpha * theta_T + (1 - alpha) * theta_S, elementwise.
void ema_update(ParamStore& teacher, const ParamStore& student, double alpha);

struct LabeledView {
  const Panorama* image = nullptr;
  const RoomLayout* layout = nullptr;
};

// Named RNG streams. Keeping them separate makes the labeled-stream draws
// independent of whether (and how) the unlabeled branch runs.
struct TrainStreams {
  Rng labeled_sampler;
  Rng unlabeled_sampler;
  Rng labeled_aug;
  Rng unlabeled_aug;
  Rng mask;

  static TrainStreams from_seed(std::uint64_t seed);
};

IterationStats train_iteration(TrainState& st, const std::vector<LabeledView>& labeled,
                               const std::vector<const Panorama*>& unlabeled,
                               const TrainerConfig& cfg, TrainStreams& streams);

MetricsReport evaluate_split(const ModelConfig& mc, const ParamStore& params, const Dataset& ds,
                             const std::vector<int>& ids, const RasterConfig& rc);

struct RunHooks {
  std::function<void(const EvalRecord&)> on_eval;
  std::function<void(const TrainState&, const EvalRecord&)> on_best;
};

struct RunResult {
  std::vector<EvalRecord> history;
  BestRecord best;
};

// The full loop: 1:1 labeled/unlabeled batches, three student passes and one
// teacher pass per unlabeled sample, EMA after each optimizer step, and
// periodic validation of both models (3D IoU primary, RMSE tiebreak).
RunResult run_training(TrainState& st, const Dataset& ds, const std::vector<int>& labeled_ids,
                       const std::vector<int>& unlabeled_ids, const std::vector<int>& val_ids,
                       const TrainerConfig& cfg, const RunHooks& hooks = {});

}  // namespace panolayout
