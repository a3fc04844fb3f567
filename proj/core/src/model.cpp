#include "panolayout/model.hpp"

#include <cmath>
#include <stdexcept>

#include "panolayout/rng.hpp"

namespace panolayout {

ParamSlot& ParamStore::add(std::string name, nn::Tensor init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  nn::Tensor grad = nn::Tensor::zeros(init.shape);
  slots_.push_back(ParamSlot{std::move(name), std::move(init), std::move(grad)});
  return slots_.back();
}

ParamSlot* ParamStore::find(std::string_view name) {
  for (ParamSlot& s : slots_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const ParamSlot* ParamStore::find(std::string_view name) const {
  return const_cast<ParamStore*>(this)->find(name);
}

bool ParamStore::same_manifest(const ParamStore& other) const {
  if (slots_.size() != other.slots_.size()) return false;
  for (size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name != other.slots_[i].name) return false;
    if (slots_[i].value.shape != other.slots_[i].value.shape) return false;
  }
  return true;
}

void ParamStore::zero_grads() {
  for (ParamSlot& s : slots_) {
    std::fill(s.grad.data.begin(), s.grad.data.end(), 0.0);
  }
}

size_t ParamStore::parameter_count() const {
  size_t n = 0;
  for (const ParamSlot& s : slots_) n += s.value.data.size();
  return n;
}

namespace {

nn::Tensor he_init(std::vector<int> shape, int fan_in, Rng& rng) {
  nn::Tensor t(std::move(shape));
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (double& v : t.data) v = std_dev * rng.normal();
  return t;
}

}  // namespace

ParamStore Model::init_params(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  ParamStore p;
  p.add("enc1.w", he_init({cfg.enc1, 3, 3, 3}, 3 * 9, rng));
  p.add("enc1.b", nn::Tensor::zeros({cfg.enc1}));
  p.add("enc2.w", he_init({cfg.enc2, cfg.enc1, 3, 3}, cfg.enc1 * 9, rng));
  p.add("enc2.b", nn::Tensor::zeros({cfg.enc2}));
  p.add("enc3.w", he_init({cfg.enc3, cfg.enc2, 3, 3}, cfg.enc2 * 9, rng));
  p.add("enc3.b", nn::Tensor::zeros({cfg.enc3}));
  p.add("dec1.w", he_init({cfg.dec_hidden, cfg.enc3, 3}, cfg.enc3 * 3, rng));
  p.add("dec1.b", nn::Tensor::zeros({cfg.dec_hidden}));
  p.add("dec2.w", he_init({cfg.dec_hidden, cfg.dec_hidden, 3}, cfg.dec_hidden * 3, rng));
  p.add("dec2.b", nn::Tensor::zeros({cfg.dec_hidden}));
  p.add("head.w", he_init({3, cfg.dec_hidden, 3}, cfg.dec_hidden * 3, rng));
  // head biases start near the output scale: softplus(2.0)+0.1 ~ 2.2 m depth,
  // softplus(1.75)+1.0 ~ 2.9 m height, sigmoid(-2) ~ sparse corners
  nn::Tensor head_b({3});
  head_b.data = {2.0, 1.75, -2.0};
  p.add("head.b", std::move(head_b));
  return p;
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.input_height % 8 != 0 || cfg_.input_width % 8 != 0) {
    throw std::invalid_argument("model input resolution must be divisible by 8");
  }
  params_ = init_params(cfg_, seed);
}

ModelBinding Model::bind(nn::Tape& tape, const ParamStore& store) const {
  ModelBinding b;
  b.cfg_ = &cfg_;
  b.tape_ = &tape;
  b.leaves_.reserve(store.slots().size());
  for (const ParamSlot& s : store.slots()) b.leaves_.push_back(tape.leaf(s.value));
  return b;
}

namespace {

nn::Tensor panorama_to_tensor(const Panorama& img) {
  nn::Tensor t({3, img.height, img.width});
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < img.height; ++v) {
      for (int u = 0; u < img.width; ++u) t.at(c, v, u) = img.at(v, u, c);
    }
  }
  return t;
}

// slot indices as laid out by init_params
enum SlotIndex {
  kEnc1W = 0, kEnc1B, kEnc2W, kEnc2B, kEnc3W, kEnc3B,
  kDec1W, kDec1B, kDec2W, kDec2B, kHeadW, kHeadB,
};

}  // namespace

nn::Value ModelBinding::encode(const Panorama& img) const {
  if (img.height != cfg_->input_height || img.width != cfg_->input_width) {
    throw std::invalid_argument("encode: image resolution does not match the model");
  }
  nn::Tape& t = *tape_;
  nn::Value x = t.constant(panorama_to_tensor(img));
  x = t.relu(t.conv2d(x, leaf(kEnc1W), leaf(kEnc1B), 2));
  x = t.relu(t.conv2d(x, leaf(kEnc2W), leaf(kEnc2B), 2));
  x = t.relu(t.conv2d(x, leaf(kEnc3W), leaf(kEnc3B), 2));
  return x;
}

Prediction ModelBinding::decode(nn::Value feature_map) const {
  nn::Tape& t = *tape_;
  nn::Value x = t.mean_rows(feature_map);
  x = t.relu(t.conv1d(x, leaf(kDec1W), leaf(kDec1B)));
  x = t.relu(t.conv1d(x, leaf(kDec2W), leaf(kDec2B)));
  x = t.upsample_linear(x, 8);
  nn::Value raw = t.conv1d(x, leaf(kHeadW), leaf(kHeadB));

  Prediction p;
  p.depth_raw = t.select_channel(raw, 0);
  p.height_raw = t.select_channel(raw, 1);
  p.corner_raw = t.select_channel(raw, 2);
  p.depth = t.add_scalar(t.softplus(p.depth_raw), 0.1);
  p.height = t.add_scalar(t.mean_all(t.softplus(p.height_raw)), 1.0);
  p.corner = t.sigmoid(p.corner_raw);
  return p;
}

Prediction ModelBinding::forward(const Panorama& img, const FeatureMask* mask) const {
  nn::Value f = encode(img);
  if (mask) {
    if (mask->channels != cfg_->feature_channels() || mask->rows != cfg_->feature_rows() ||
        mask->cols != cfg_->feature_cols()) {
      throw std::invalid_argument("forward: mask shape does not match the feature map");
    }
    f = tape_->mul_const(f, mask->multiplier());
  }
  return decode(f);
}

void ModelBinding::accumulate_grads(ParamStore& store) const {
  if (store.slots().size() != leaves_.size()) {
    throw std::invalid_argument("accumulate_grads: store does not match the binding");
  }
  for (size_t i = 0; i < leaves_.size(); ++i) {
    if (!tape_->has_grad(leaves_[i].id)) continue;
    const nn::Tensor& g = tape_->grad(leaves_[i].id);
    nn::Tensor& dst = store.slots()[i].grad;
    for (size_t j = 0; j < g.data.size(); ++j) dst.data[j] += g.data[j];
  }
}

DecodedPrediction decode_values(const Prediction& p) {
  DecodedPrediction d;
  d.depth = p.depth.val().data;
  d.height = p.height.val()[0];
  d.corner_score = p.corner.val().data;
  return d;
}

AdamState::AdamState(const ParamStore& params) {
  m_.reserve(params.slots().size());
  v_.reserve(params.slots().size());
  for (const ParamSlot& s : params.slots()) {
    m_.push_back(nn::Tensor::zeros(s.value.shape));
    v_.push_back(nn::Tensor::zeros(s.value.shape));
  }
}

void AdamState::step(ParamStore& params, const AdamConfig& cfg) {
  if (params.slots().size() != m_.size()) {
    throw std::invalid_argument("adam state does not match the parameter store");
  }
  for (const ParamSlot& s : params.slots()) {
    for (double g : s.grad.data) {
      if (!std::isfinite(g)) {
        throw std::runtime_error("non-finite gradient in parameter " + s.name);
      }
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.slots().size(); ++i) {
    ParamSlot& s = params.slots()[i];
    nn::Tensor& m = m_[i];
    nn::Tensor& v = v_[i];
    for (size_t j = 0; j < s.value.data.size(); ++j) {
      const double g = s.grad.data[j];
      m.data[j] = cfg.beta1 * m.data[j] + (1.0 - cfg.beta1) * g;
      v.data[j] = cfg.beta2 * v.data[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m.data[j] / bc1;
      const double v_hat = v.data[j] / bc2;
      s.value.data[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  params.zero_grads();
  ++params.update_count;
}

}  // namespace panolayout
