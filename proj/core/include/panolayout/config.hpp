#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "panolayout/augment.hpp"
#include "panolayout/feature_mask.hpp"
#include "panolayout/geometry.hpp"
#include "panolayout/losses.hpp"

namespace panolayout {

// Flat experiment configuration. Files use one `key = value` per line,
// `#` comments, and reject unknown keys. Every key has a range check.
struct ExperimentConfig {
  std::string dataset_dir = "data";
  std::string out_dir = "runs/out";
  std::uint64_t seed = 1;

  // dataset generation
  int data_train = 500;
  int data_val = 50;
  int data_test = 100;
  int height = 64;
  int width = 128;
  GenConfig gen;
  double noise_sigma = 0.003;

  // strong augmentation
  StrongAugParams strong;

  // feature mask
  MaskConfig mask;

  // loss weights
  LossWeights loss_w;

  // trainer
  std::int64_t total_iters = 2000;
  std::int64_t eval_interval = 100;
  double lr = 1e-4;
  double ema_decay = 0.999;
  int batch_labeled = 4;
  int batch_unlabeled = 4;
  int label_budget = 20;
  int unlabeled_budget = -1;  // -1 = all remaining train-pool samples
  double ramp_frac = 0.3;
  double lambda_max = 1.0;
  std::string ablation_mode = "collaborative";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate_config(const ExperimentConfig& cfg);

// Canonical full key dump; also the hashing input.
std::string canonical_config_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace panolayout
