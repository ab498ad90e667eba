#include "fft.hpp"

#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace jianpu::detail {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T, FftwFree> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return std::unique_ptr<T, FftwFree>(p);
}

// Plans are made once per (direction, size) and reused through the
// new-array execute interface, which is thread-safe. Buffers always come
// from fftw_malloc so alignment matches the planning arrays.
fftw_plan cached_plan(bool forward, int height, int width) {
  static std::map<std::tuple<bool, int, int>, fftw_plan> plans;
  std::lock_guard lock(planner_mutex());
  auto& plan = plans[{forward, height, width}];
  if (!plan) {
    const int hw = width / 2 + 1;
    auto real = fftw_buffer<double>(static_cast<std::size_t>(height) * width);
    auto cplx = fftw_buffer<fftw_complex>(static_cast<std::size_t>(height) * hw);
    plan = forward ? fftw_plan_dft_r2c_2d(height, width, real.get(), cplx.get(), FFTW_ESTIMATE)
                   : fftw_plan_dft_c2r_2d(height, width, cplx.get(), real.get(), FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("FFTW planning failed");
  }
  return plan;
}

}  // namespace

int fft_good_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

Spectrum forward_fft(const float* data, int rows, int cols, int height, int width) {
  Spectrum s;
  s.height = height;
  s.width = width;
  const int hw = s.half_width();
  auto in = fftw_buffer<double>(static_cast<std::size_t>(height) * width);
  auto out = fftw_buffer<fftw_complex>(static_cast<std::size_t>(height) * hw);
  const fftw_plan plan = cached_plan(true, height, width);
  std::memset(in.get(), 0, sizeof(double) * height * width);
  for (int y = 0; y < std::min(rows, height); ++y) {
    for (int x = 0; x < std::min(cols, width); ++x) {
      in.get()[static_cast<std::size_t>(y) * width + x] = data[static_cast<std::size_t>(y) * cols + x];
    }
  }
  fftw_execute_dft_r2c(plan, in.get(), out.get());
  s.bins.resize(static_cast<std::size_t>(height) * hw);
  for (std::size_t i = 0; i < s.bins.size(); ++i) s.bins[i] = {out.get()[i][0], out.get()[i][1]};
  return s;
}

std::vector<double> inverse_fft(const Spectrum& spectrum) {
  const int hw = spectrum.half_width();
  auto in = fftw_buffer<fftw_complex>(static_cast<std::size_t>(spectrum.height) * hw);
  auto out = fftw_buffer<double>(static_cast<std::size_t>(spectrum.height) * spectrum.width);
  const fftw_plan plan = cached_plan(false, spectrum.height, spectrum.width);
  for (std::size_t i = 0; i < spectrum.bins.size(); ++i) {
    in.get()[i][0] = spectrum.bins[i].real();
    in.get()[i][1] = spectrum.bins[i].imag();
  }
  fftw_execute_dft_c2r(plan, in.get(), out.get());
  return std::vector<double>(out.get(), out.get() + static_cast<std::size_t>(spectrum.height) * spectrum.width);
}

}  // namespace jianpu::detail
