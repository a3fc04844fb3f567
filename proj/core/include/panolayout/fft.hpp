#pragma once

#include <complex>
#include <vector>

namespace panolayout {

// In-place DFT of arbitrary length: radix-2 for powers of two, Bluestein
// otherwise. inverse=true applies the conjugate transform without the 1/n
// scale; callers divide by n themselves.
void fft(std::vector<std::complex<double>>& a, bool inverse);

// 2-D transform of row-major h x w data (rows first, then columns).
void fft_2d(std::vector<std::complex<double>>& a, int h, int w, bool inverse);

}  // namespace panolayout
