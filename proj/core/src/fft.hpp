#pragma once

// Thin RAII layer over FFTW's 2-D real transforms. Internal to the core
// library.

#include <fftw3.h>

#include <complex>
#include <memory>
#include <vector>

namespace jianpu::detail {

/// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
int fft_good_size(int n);

/// Half-spectrum of a real height x width array, (height, width/2+1).
struct Spectrum {
  int height = 0;
  int width = 0;  // spatial width
  std::vector<std::complex<double>> bins;

  [[nodiscard]] int half_width() const { return width / 2 + 1; }
};

/// Forward transform of a row-major real array (zero-padded to the
/// requested size when the input is smaller).
Spectrum forward_fft(const float* data, int rows, int cols, int height, int width);

/// Unnormalised inverse transform back to a real (height x width) array.
std::vector<double> inverse_fft(const Spectrum& spectrum);

}  // namespace jianpu::detail
