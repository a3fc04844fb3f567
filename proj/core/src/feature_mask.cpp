#include "panolayout/feature_mask.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace panolayout {

namespace {

void check_config(const MaskConfig& cfg) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(cfg.p_center) || !in01(cfg.p_edge) || !in01(cfg.p_channel)) {
    throw std::invalid_argument("mask probabilities must lie in [0, 1]");
  }
}

// Scale/fraction pair whose product rounds to exactly 1.0. Both values are
// adjusted within a few ulps of total/kept and kept/total; for some ratios no
// adjustment of the scale alone can land on 1.0 exactly.
struct ScalePair {
  double scale;
  double kept_fraction;
};

ScalePair exact_inverse_scale(std::int64_t kept, std::int64_t total) {
  const double inf = std::numeric_limits<double>::infinity();
  const double pf0 = static_cast<double>(kept) / static_cast<double>(total);
  double lo = pf0, hi = pf0;
  for (int i = 0; i < 128; ++i) {
    const double pf = (i % 2 == 0) ? lo : hi;
    double s = 1.0 / pf;
    for (int ds = 0; ds < 4; ++ds) {
      if (s * pf == 1.0) return {s, pf};
      s = std::nextafter(s, s * pf < 1.0 ? inf : -inf);
    }
    if (i % 2 == 0) {
      lo = std::nextafter(lo, 0.0);
    } else {
      hi = std::nextafter(hi, 2.0);
    }
  }
  throw std::runtime_error("could not normalize mask scale");
}

}  // namespace

double mask_probability(double y, const MaskConfig& cfg) {
  check_config(cfg);
  if (std::abs(y) > 1.0) throw std::invalid_argument("mask coordinate outside [-1, 1]");
  return cfg.p_center + (cfg.p_edge - cfg.p_center) * y * y;
}

FeatureMask build_mask(int channels, int rows, int cols, const MaskConfig& cfg, Rng& rng) {
  check_config(cfg);
  if (channels <= 0 || rows < 2 || cols <= 0) {
    throw std::invalid_argument("build_mask: need channels > 0, rows >= 2, cols > 0");
  }
  const int n_sel = static_cast<int>(std::lround(cfg.p_channel * channels));

  FeatureMask m;
  m.channels = channels;
  m.rows = rows;
  m.cols = cols;
  m.channel_selected.assign(channels, 0);
  if (n_sel == 0) {
    m.scale = 1.0;
    return m;  // identity
  }

  std::vector<double> row_p(rows);
  for (int v = 0; v < rows; ++v) {
    const double y = 2.0 * v / (rows - 1) - 1.0;
    row_p[v] = mask_probability(y, cfg);
  }

  for (int attempt = 0; attempt < 100; ++attempt) {
    m.channel_selected.assign(channels, 0);
    std::vector<int> idx(channels);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n_sel; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(channels - i));
      std::swap(idx[i], idx[j]);
      m.channel_selected[idx[i]] = 1;
    }
    m.total_count = static_cast<std::int64_t>(n_sel) * rows * cols;
    m.keep.assign(m.total_count, 0);
    m.kept_count = 0;
    std::int64_t at = 0;
    for (int s = 0; s < n_sel; ++s) {
      for (int v = 0; v < rows; ++v) {
        for (int u = 0; u < cols; ++u, ++at) {
          const bool drop = rng.bernoulli(row_p[v]);
          m.keep[at] = drop ? 0 : 1;
          m.kept_count += m.keep[at];
        }
      }
    }
    if (m.kept_count > 0) {
      const ScalePair sp = exact_inverse_scale(m.kept_count, m.total_count);
      m.scale = sp.scale;
      m.fraction = sp.kept_fraction;
      return m;
    }
  }
  throw std::runtime_error("build_mask: all elements dropped in 100 consecutive draws");
}

nn::Tensor FeatureMask::multiplier() const {
  nn::Tensor t({channels, rows, cols});
  const size_t plane = static_cast<size_t>(rows) * cols;
  size_t sel_at = 0;
  for (int c = 0; c < channels; ++c) {
    double* out = &t.data[c * plane];
    if (!channel_selected[c]) {
      for (size_t i = 0; i < plane; ++i) out[i] = 1.0;
      continue;
    }
    for (size_t i = 0; i < plane; ++i) out[i] = keep[sel_at * plane + i] ? scale : 0.0;
    ++sel_at;
  }
  return t;
}

nn::Tensor apply_mask(const nn::Tensor& features, const FeatureMask& mask) {
  if (features.ndim() != 3 || features.dim(0) != mask.channels || features.dim(1) != mask.rows ||
      features.dim(2) != mask.cols) {
    throw std::invalid_argument("apply_mask: feature/mask shape mismatch");
  }
  nn::Tensor out = features;
  const size_t plane = static_cast<size_t>(mask.rows) * mask.cols;
  size_t sel_at = 0;
  for (int c = 0; c < mask.channels; ++c) {
    if (!mask.channel_selected[c]) continue;
    double* o = &out.data[c * plane];
    const std::uint8_t* k = &mask.keep[sel_at * plane];
    for (size_t i = 0; i < plane; ++i) o[i] = k[i] ? o[i] * mask.scale : 0.0;
    ++sel_at;
  }
  return out;
}

}  // namespace panolayout
