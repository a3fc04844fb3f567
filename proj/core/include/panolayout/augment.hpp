#pragma once

#include "panolayout/geometry.hpp"
#include "panolayout/rng.hpp"

namespace panolayout {

// Weak (geometric) augmentation: flip, then anisotropic floor-plan stretch,
// then an exact circular column rotation.
struct WeakAugParams {
  bool flip = false;
  double k_x = 1.0;
  double k_z = 1.0;
  int rotate_cols = 0;
};

// Strong (photometric) augmentation: histogram equalization followed by a
// frequency-domain boundary emphasis filter. Pixel positions never move.
struct StrongAugParams {
  bool hist_eq = true;
  double hp_cutoff = 0.1;  // Gaussian knee as a fraction of the Nyquist radius
  double hp_floor = 0.6;   // retained low-frequency gain
  double hp_blend = 0.6;   // mix weight of the filtered image
};

// flip ~ Bernoulli(0.5), k_x/k_z ~ U[0.5, 2], rotate_cols ~ U{0..w-1}.
WeakAugParams sample_weak_params(Rng& rng, int w);

// Labeled samples must stay Manhattan after the layout co-transform, so the
// rotation is restricted to quarter turns (w must be divisible by 4).
WeakAugParams sample_weak_params_labeled(Rng& rng, int w);

Panorama weak_augment_image(const Panorama& img, const WeakAugParams& p);

// Layout co-transform matching weak_augment_image's flip/stretch/rotate order.
RoomLayout weak_augment_layout(const RoomLayout& layout, const WeakAugParams& p, int w);

// Targets are recomputed from the transformed layout, never resampled in
// image space, so labels stay exact.
std::pair<LayoutTarget, RoomLayout> weak_augment_target(const LayoutTarget& t,
                                                        const RoomLayout& layout,
                                                        const WeakAugParams& p);

// Per-channel 256-bin equalization; the mapping v -> cdf(bin(v)) is monotone.
Panorama hist_equalize(const Panorama& img);

// Per channel: DFT, multiply by G(D) = floor + (1-floor)(1 - exp(-D^2/2D0^2))
// with D0 = cutoff * Nyquist radius, inverse DFT, blend with the input, clamp.
Panorama fft_highpass(const Panorama& img, double cutoff, double floor_gain, double blend);

Panorama strong_augment(const Panorama& img, const StrongAugParams& p);

}  // namespace panolayout
