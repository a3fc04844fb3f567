#pragma once

#include <cstdint>
#include <vector>

#include "panolayout/rng.hpp"
#include "panolayout/tensor.hpp"

namespace panolayout {

struct MaskConfig {
  double p_center = 0.2;   // drop probability at the vertical center
  double p_edge = 0.8;     // drop probability at the top/bottom rows
  double p_channel = 0.2;  // fraction of channels masked
};

// Quadratic drop schedule over the normalized vertical coordinate y in
// [-1, 1]: P(y) = p_center + (p_edge - p_center) * y^2.
double mask_probability(double y, const MaskConfig& cfg);

// A realized keep/drop pattern over the selected channels, plus the
// magnitude-preserving scale. scale * kept_fraction() == 1.0 holds exactly.
struct FeatureMask {
  int channels = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> channel_selected;  // per channel
  std::vector<std::uint8_t> keep;              // selected channels, row-major
  double scale = 1.0;
  double fraction = 1.0;  // kept/total, paired with scale so scale*fraction == 1
  std::int64_t kept_count = 0;
  std::int64_t total_count = 0;  // elements in selected channels

  bool identity() const { return total_count == 0; }
  double kept_fraction() const { return fraction; }
  // Per-element multiplier [channels, rows, cols]: scale on kept elements of
  // selected channels, 0 on dropped ones, 1 on untouched channels.
  nn::Tensor multiplier() const;
};

// Selects exactly round(p_channel * channels) channels without replacement,
// then drops each element of a selected channel with probability P(y_row).
// An all-dropped draw is resampled (bounded retries).
FeatureMask build_mask(int channels, int rows, int cols, const MaskConfig& cfg, Rng& rng);

nn::Tensor apply_mask(const nn::Tensor& features, const FeatureMask& mask);

}  // namespace panolayout
