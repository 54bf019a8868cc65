#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "stereofake/audio_io.hpp"

namespace stereofake {

// One-pole high-pass filter parameters. The recursion coefficient is
// alpha = 1 / (1 + 2*pi*cutoff*T) with sample period T = 1 / rate.
class FilterSpec {
 public:
  // Throws InvalidArgument unless 0 < cutoff_hz < sample_rate_hz / 2.
  FilterSpec(double cutoff_hz, int sample_rate_hz);

  double cutoff_hz() const { return cutoff_hz_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  double sample_period_s() const { return sample_period_s_; }
  double alpha() const { return alpha_; }

 private:
  double cutoff_hz_;
  int sample_rate_hz_;
  double sample_period_s_;
  double alpha_;
};

// Which channel of the fake carries the filtered copy.
enum class FakedSide {
  kRight,  // mono source on the left, filtered copy on the right
  kLeft,   // filtered copy on the left, mono source on the right
};

std::string_view to_string(FakedSide side);
FakedSide parse_faked_side(std::string_view text);

// y[l] = alpha * (x[l] - x[l-1] + y[l-1]) with x[-1] = y[-1] = 0.
void high_pass_filter(std::span<const double> x, double alpha,
                      std::span<double> out);
// Throws InvalidArgument if the clip's rate differs from the filter's.
MonoClip high_pass_filter(const MonoClip& x, const FilterSpec& spec);

StereoClip fake_stereo_copy(const MonoClip& x);
StereoClip fake_stereo_haas(const MonoClip& x, const FilterSpec& spec,
                            FakedSide side);

// True iff max |left - right| <= tolerance.
bool is_channel_copy(const StereoClip& y, double tolerance = 0.0);

}  // namespace stereofake
