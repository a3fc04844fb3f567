#include "panolayout/augment.hpp"

#include <algorithm>
#include <complex>
#include <stdexcept>

#include "panolayout/fft.hpp"

namespace panolayout {

namespace {

void check_params(const WeakAugParams& p, int w) {
  if (!(p.k_x >= 0.5 && p.k_x <= 2.0 && p.k_z >= 0.5 && p.k_z <= 2.0)) {
    throw std::invalid_argument("stretch factors must lie in [0.5, 2]");
  }
  if (p.rotate_cols < 0 || p.rotate_cols >= w) {
    throw std::invalid_argument("rotate_cols out of range");
  }
}

double bilinear_sample(const Panorama& img, double vf, double uf, int c) {
  const int h = img.height, w = img.width;
  const int u0 = static_cast<int>(std::floor(uf));
  const int v0 = static_cast<int>(std::floor(vf));
  const double fu = uf - u0;
  const double fv = vf - v0;
  const int ua = ((u0 % w) + w) % w;
  const int ub = (ua + 1) % w;
  const int va = std::clamp(v0, 0, h - 1);
  const int vb = std::clamp(v0 + 1, 0, h - 1);
  return (1.0 - fv) * ((1.0 - fu) * img.at(va, ua, c) + fu * img.at(va, ub, c)) +
         fv * ((1.0 - fu) * img.at(vb, ua, c) + fu * img.at(vb, ub, c));
}

}  // namespace

WeakAugParams sample_weak_params(Rng& rng, int w) {
  WeakAugParams p;
  p.flip = rng.bernoulli(0.5);
  p.k_x = rng.uniform(0.5, 2.0);
  p.k_z = rng.uniform(0.5, 2.0);
  p.rotate_cols = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(w)));
  return p;
}

WeakAugParams sample_weak_params_labeled(Rng& rng, int w) {
  if (w % 4 != 0) throw std::invalid_argument("labeled augmentation needs width divisible by 4");
  WeakAugParams p;
  p.flip = rng.bernoulli(0.5);
  p.k_x = rng.uniform(0.5, 2.0);
  p.k_z = rng.uniform(0.5, 2.0);
  p.rotate_cols = static_cast<int>(rng.uniform_int(4)) * (w / 4);
  return p;
}

Panorama weak_augment_image(const Panorama& img, const WeakAugParams& p) {
  const int h = img.height, w = img.width;
  check_params(p, w);
  Panorama out(h, w);

  if (p.k_x == 1.0 && p.k_z == 1.0) {
    // Flip and rotation are exact index permutations; keep them bit-exact.
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        int u1 = (u - p.rotate_cols + w) % w;
        if (p.flip) u1 = w - 1 - u1;
        for (int c = 0; c < 3; ++c) out.at(v, u, c) = img.at(v, u1, c);
      }
    }
    return out;
  }

  for (int v = 0; v < h; ++v) {
    const double phi = row_phi(v, h);
    const double sy = std::sin(phi);
    const double cp = std::cos(phi);
    for (int u = 0; u < w; ++u) {
      const int u1 = (u - p.rotate_cols + w) % w;
      const double theta = col_theta(u1, w);
      // Direction in the stretched scene maps back to the source direction
      // by dividing the floor-plane components by the stretch factors.
      const double sx = cp * std::cos(theta) / p.k_x;
      const double sz = cp * std::sin(theta) / p.k_z;
      const double norm = std::sqrt(sx * sx + sy * sy + sz * sz);
      const double phi_s = std::asin(std::clamp(sy / norm, -1.0, 1.0));
      const double theta_s = std::atan2(sz, sx);
      double uf = theta_to_col(theta_s, w);
      const double vf = phi_to_row(phi_s, h);
      if (p.flip) uf = (w - 1) - uf;
      for (int c = 0; c < 3; ++c) out.at(v, u, c) = bilinear_sample(img, vf, uf, c);
    }
  }
  return out;
}

RoomLayout weak_augment_layout(const RoomLayout& layout, const WeakAugParams& p, int w) {
  check_params(p, w);
  RoomLayout cur = p.flip ? flip_layout(layout) : layout;
  if (p.k_x != 1.0 || p.k_z != 1.0) cur = stretch_layout(cur, p.k_x, p.k_z);
  if (p.rotate_cols != 0) {
    cur = rotate_layout(cur, 2.0 * M_PI * static_cast<double>(p.rotate_cols) / w);
  }
  return cur;
}

std::pair<LayoutTarget, RoomLayout> weak_augment_target(const LayoutTarget& t,
                                                        const RoomLayout& layout,
                                                        const WeakAugParams& p) {
  const int w = static_cast<int>(t.depth.size());
  RoomLayout moved = weak_augment_layout(layout, p, w);
  return {target_from_layout(moved, w), std::move(moved)};
}

Panorama hist_equalize(const Panorama& img) {
  const size_t n = static_cast<size_t>(img.height) * img.width;
  Panorama out(img.height, img.width);
  for (int c = 0; c < 3; ++c) {
    std::array<std::int64_t, 256> hist{};
    for (size_t i = 0; i < n; ++i) {
      const double v = img.pixels[i * 3 + c];
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("hist_equalize: values outside [0, 1]");
      const int b = std::min(255, static_cast<int>(v * 256.0));
      ++hist[b];
    }
    std::array<double, 256> cdf{};
    std::int64_t cum = 0;
    for (int b = 0; b < 256; ++b) {
      cum += hist[b];
      cdf[b] = static_cast<double>(cum) / static_cast<double>(n);
    }
    for (size_t i = 0; i < n; ++i) {
      const double v = img.pixels[i * 3 + c];
      const int b = std::min(255, static_cast<int>(v * 256.0));
      out.pixels[i * 3 + c] = cdf[b];
    }
  }
  return out;
}

Panorama fft_highpass(const Panorama& img, double cutoff, double floor_gain, double blend) {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) throw std::invalid_argument("cutoff outside (0, 1]");
  if (!(floor_gain >= 0.0 && floor_gain <= 1.0)) throw std::invalid_argument("floor outside [0, 1]");
  if (!(blend >= 0.0 && blend <= 1.0)) throw std::invalid_argument("blend outside [0, 1]");
  const int h = img.height, w = img.width;
  const double half_h = 0.5 * h, half_w = 0.5 * w;
  const double d0 = cutoff * std::sqrt(half_h * half_h + half_w * half_w);
  const double inv_2d02 = 1.0 / (2.0 * d0 * d0);

  std::vector<double> gain(static_cast<size_t>(h) * w);
  for (int v = 0; v < h; ++v) {
    const double fy = v <= h / 2 ? v : v - h;
    for (int u = 0; u < w; ++u) {
      const double fx = u <= w / 2 ? u : u - w;
      const double d2 = fy * fy + fx * fx;
      gain[static_cast<size_t>(v) * w + u] =
          floor_gain + (1.0 - floor_gain) * (1.0 - std::exp(-d2 * inv_2d02));
    }
  }

  Panorama out(h, w);
  std::vector<std::complex<double>> buf(static_cast<size_t>(h) * w);
  const double inv_n = 1.0 / (static_cast<double>(h) * w);
  for (int c = 0; c < 3; ++c) {
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = img.pixels[i * 3 + c];
    fft_2d(buf, h, w, false);
    for (size_t i = 0; i < buf.size(); ++i) buf[i] *= gain[i];
    fft_2d(buf, h, w, true);
    for (size_t i = 0; i < buf.size(); ++i) {
      const double filtered = buf[i].real() * inv_n;
      const double mixed = (1.0 - blend) * img.pixels[i * 3 + c] + blend * filtered;
      out.pixels[i * 3 + c] = std::clamp(mixed, 0.0, 1.0);
    }
  }
  return out;
}

Panorama strong_augment(const Panorama& img, const StrongAugParams& p) {
  const Panorama eq = p.hist_eq ? hist_equalize(img) : img;
  return fft_highpass(eq, p.hp_cutoff, p.hp_floor, p.hp_blend);
}

}  // namespace panolayout
