#include "power_spectrum.hpp"

#include <mutex>
#include <new>

namespace stereofake::detail {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

PowerSpectrum::PowerSpectrum(std::size_t fft_len) : fft_len_(fft_len) {
  std::lock_guard lock(planner_mutex());
  in_ = fftw_alloc_real(fft_len_);
  out_ = fftw_alloc_complex(fft_len_ / 2 + 1);
  if (in_ == nullptr || out_ == nullptr) throw std::bad_alloc();
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(fft_len_), in_, out_,
                               FFTW_ESTIMATE);
  for (std::size_t i = 0; i < fft_len_; ++i) in_[i] = 0.0;
}

PowerSpectrum::~PowerSpectrum() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan_);
  fftw_free(in_);
  fftw_free(out_);
}

void PowerSpectrum::compute(std::span<double> power) {
  fftw_execute(plan_);
  const std::size_t bins = num_bins();
  for (std::size_t k = 0; k < bins && k < power.size(); ++k) {
    power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }
}

}  // namespace stereofake::detail
