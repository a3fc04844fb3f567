#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "panolayout/feature_mask.hpp"
#include "panolayout/geometry.hpp"
#include "panolayout/tape.hpp"
#include "panolayout/tensor.hpp"

namespace panolayout {

// Toy encoder-decoder over equirectangular input. Three stride-2 conv blocks
// (circular in width, zero-padded in height), a row mean, two circular 1-D
// convs, a linear x8 width upsample and a 3-channel head. Output channels:
// horizon depth, room height, corner score.
struct ModelConfig {
  int input_height = 64;
  int input_width = 128;
  int enc1 = 16;
  int enc2 = 32;
  int enc3 = 32;
  int dec_hidden = 64;

  int feature_channels() const { return enc3; }
  int feature_rows() const { return input_height / 8; }
  int feature_cols() const { return input_width / 8; }
};

struct ParamSlot {
  std::string name;
  nn::Tensor value;
  nn::Tensor grad;
};

// Named parameters with matching gradient buffers. Slot order is fixed at
// construction; EMA updates and checkpoints pair slots by position.
class ParamStore {
 public:
  ParamSlot& add(std::string name, nn::Tensor init);
  ParamSlot* find(std::string_view name);
  const ParamSlot* find(std::string_view name) const;
  std::vector<ParamSlot>& slots() { return slots_; }
  const std::vector<ParamSlot>& slots() const { return slots_; }
  bool same_manifest(const ParamStore& other) const;
  void zero_grads();
  size_t parameter_count() const;

  std::int64_t update_count = 0;

 private:
  std::vector<ParamSlot> slots_;
};

// Raw per-column channels plus decoded views. depth = softplus(raw) + 0.1 m,
// height = mean(softplus(raw)) + 1.0 m, corner = sigmoid(raw).
struct Prediction {
  nn::Value depth_raw, height_raw, corner_raw;  // [W] each
  nn::Value depth;                              // [W]
  nn::Value height;                             // [1]
  nn::Value corner;                             // [W]

  bool requires_grad() const {
    return (depth_raw.defined() && depth_raw.requires_grad()) ||
           (depth.defined() && depth.requires_grad()) ||
           (height.defined() && height.requires_grad());
  }
};

struct DecodedPrediction {
  std::vector<double> depth;
  double height = 0.0;
  std::vector<double> corner_score;
};

DecodedPrediction decode_values(const Prediction& p);

class Model;

// One parameter store materialized as leaves on one tape. Create one binding
// per store per tape, run forwards through it, then (after backward) fold the
// leaf gradients back into the store.
class ModelBinding {
 public:
  nn::Value encode(const Panorama& img) const;
  Prediction decode(nn::Value feature_map) const;
  Prediction forward(const Panorama& img, const FeatureMask* mask = nullptr) const;
  void accumulate_grads(ParamStore& store) const;

 private:
  friend class Model;
  const ModelConfig* cfg_ = nullptr;
  nn::Tape* tape_ = nullptr;
  std::vector<nn::Value> leaves_;  // parallel to store slots

  nn::Value leaf(size_t i) const { return leaves_[i]; }
};

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  ModelBinding bind(nn::Tape& tape) const { return bind(tape, params_); }
  ModelBinding bind(nn::Tape& tape, const ParamStore& store) const;

  static ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed);

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. step() validates gradient finiteness, updates
// parameters in place and clears the gradients.
class AdamState {
 public:
  explicit AdamState(const ParamStore& params);
  void step(ParamStore& params, const AdamConfig& cfg);

  std::int64_t t() const { return t_; }
  void set_t(std::int64_t t) { t_ = t; }
  std::vector<nn::Tensor>& first_moments() { return m_; }
  std::vector<nn::Tensor>& second_moments() { return v_; }
  const std::vector<nn::Tensor>& first_moments() const { return m_; }
  const std::vector<nn::Tensor>& second_moments() const { return v_; }

 private:
  std::vector<nn::Tensor> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace panolayout
