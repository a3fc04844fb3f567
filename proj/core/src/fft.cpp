#include "panolayout/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace panolayout {

namespace {

using cd = std::complex<double>;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2(std::vector<cd>& a, bool inverse) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const cd wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const cd u = a[i + j];
        const cd v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Chirp-z reformulation: an n-point DFT as a circular convolution of
// power-of-two length m >= 2n - 1.
void fft_bluestein(std::vector<cd>& a, bool inverse) {
  const size_t n = a.size();
  size_t m = 1;
  while (m < 2 * n + 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;

  std::vector<cd> chirp(n);
  for (size_t k = 0; k < n; ++k) {
    const size_t k2 = (k * k) % (2 * n);  // exact angle modulo a full turn
    const double ang = sign * M_PI * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cd(std::cos(ang), std::sin(ang));
  }

  std::vector<cd> u(m, cd(0.0, 0.0)), v(m, cd(0.0, 0.0));
  for (size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
  v[0] = std::conj(chirp[0]);
  for (size_t k = 1; k < n; ++k) v[k] = v[m - k] = std::conj(chirp[k]);

  fft_pow2(u, false);
  fft_pow2(v, false);
  for (size_t i = 0; i < m; ++i) u[i] *= v[i];
  fft_pow2(u, true);

  const double inv_m = 1.0 / static_cast<double>(m);
  for (size_t k = 0; k < n; ++k) a[k] = u[k] * chirp[k] * inv_m;
}

}  // namespace

void fft(std::vector<cd>& a, bool inverse) {
  if (a.size() <= 1) return;
  if (is_pow2(a.size())) {
    fft_pow2(a, inverse);
  } else {
    fft_bluestein(a, inverse);
  }
}

void fft_2d(std::vector<cd>& a, int h, int w, bool inverse) {
  if (a.size() != static_cast<size_t>(h) * w) throw std::invalid_argument("fft_2d: bad size");
  std::vector<cd> row(w), col(h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) row[u] = a[static_cast<size_t>(v) * w + u];
    fft(row, inverse);
    for (int u = 0; u < w; ++u) a[static_cast<size_t>(v) * w + u] = row[u];
  }
  for (int u = 0; u < w; ++u) {
    for (int v = 0; v < h; ++v) col[v] = a[static_cast<size_t>(v) * w + u];
    fft(col, inverse);
    for (int v = 0; v < h; ++v) a[static_cast<size_t>(v) * w + u] = col[v];
  }
}

}  // namespace panolayout
