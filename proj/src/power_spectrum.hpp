#pragma once

#include <fftw3.h>

#include <cstddef>
#include <span>

namespace stereofake::detail {

// Owns an FFTW real-to-complex plan and its buffers for one transform size.
// Planning is serialized internally; execution is per-instance and may run
// concurrently with other instances.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t fft_len);
  ~PowerSpectrum();
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  std::size_t fft_len() const { return fft_len_; }
  std::size_t num_bins() const { return fft_len_ / 2 + 1; }

  // Zero-padded input buffer of fft_len samples.
  std::span<double> input() { return {in_, fft_len_}; }

  // |X_k|^2 for k = 0 .. fft_len/2 of the current input.
  void compute(std::span<double> power);

 private:
  std::size_t fft_len_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace stereofake::detail
