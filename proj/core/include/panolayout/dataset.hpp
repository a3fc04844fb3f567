#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "panolayout/config.hpp"
#include "panolayout/geometry.hpp"

namespace panolayout {

enum class Split : int { Train = 0, Val = 1, Test = 2 };
const char* to_string(Split s);

struct DatasetConfig {
  int n_train = 500;
  int n_val = 50;
  int n_test = 100;
  int height = 64;
  int width = 128;
  GenConfig gen;
  double noise_sigma = 0.003;
  std::uint64_t seed = 1;
};

DatasetConfig dataset_config_from(const ExperimentConfig& cfg);

struct SampleRecord {
  int id = 0;
  Split split = Split::Train;
  std::uint64_t style_seed = 0;
  RoomLayout layout;
};

// In-memory dataset; images are stored as float32 and widened on access.
// Targets are recomputed from the layouts, never stored.
class Dataset {
 public:
  int size() const { return static_cast<int>(records_.size()); }
  int height() const { return cfg_.height; }
  int width() const { return cfg_.width; }
  const DatasetConfig& config() const { return cfg_; }

  const SampleRecord& record(int id) const { return records_[id]; }
  Panorama image(int id) const;
  const LayoutTarget& target(int id) const;  // cached
  std::vector<int> split_ids(Split s) const;

  std::string manifest_text() const;
  std::uint64_t manifest_hash() const;

  // Deterministic per cfg.seed; per-sample streams are split by index.
  static Dataset generate(const DatasetConfig& cfg);

  // manifest.txt + samples.dat; refuses a non-empty directory unless force.
  void write(const std::filesystem::path& dir, bool force) const;
  static Dataset load(const std::filesystem::path& dir);

 private:
  DatasetConfig cfg_;
  std::vector<SampleRecord> records_;
  std::vector<std::vector<float>> images_;
  mutable std::vector<std::unique_ptr<LayoutTarget>> targets_;
};

// Deterministic labeled subset of the train split: a pure function of
// (manifest hash, label budget, seed).
std::vector<int> pick_labeled(const Dataset& ds, int label_budget, std::uint64_t seed);

}  // namespace panolayout
