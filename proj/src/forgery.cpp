#include "stereofake/forgery.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace stereofake {

FilterSpec::FilterSpec(double cutoff_hz, int sample_rate_hz)
    : cutoff_hz_(cutoff_hz), sample_rate_hz_(sample_rate_hz) {
  if (sample_rate_hz <= 0) {
    throw InvalidArgument("sample rate must be positive");
  }
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0)) {
    throw InvalidArgument("cut-off " + std::to_string(cutoff_hz) +
                          " Hz must lie in (0, Nyquist = " +
                          std::to_string(sample_rate_hz / 2.0) + " Hz)");
  }
  sample_period_s_ = 1.0 / sample_rate_hz;
  alpha_ = 1.0 / (1.0 + 2.0 * std::numbers::pi * cutoff_hz_ * sample_period_s_);
}

std::string_view to_string(FakedSide side) {
  return side == FakedSide::kRight ? "right" : "left";
}

FakedSide parse_faked_side(std::string_view text) {
  if (text == "right") return FakedSide::kRight;
  if (text == "left") return FakedSide::kLeft;
  throw InvalidArgument("faked side must be left or right, got '" +
                        std::string(text) + "'");
}

void high_pass_filter(std::span<const double> x, double alpha,
                      std::span<double> out) {
  if (out.size() != x.size()) {
    throw InvalidArgument("high_pass_filter: output size mismatch");
  }
  double prev_in = 0.0;
  double prev_out = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    prev_out = alpha * (x[l] - prev_in + prev_out);
    prev_in = x[l];
    out[l] = prev_out;
  }
}

MonoClip high_pass_filter(const MonoClip& x, const FilterSpec& spec) {
  if (x.sample_rate_hz() != spec.sample_rate_hz()) {
    throw InvalidArgument("filter designed for " +
                          std::to_string(spec.sample_rate_hz()) +
                          " Hz applied to a " +
                          std::to_string(x.sample_rate_hz()) + " Hz clip");
  }
  std::vector<double> out(x.size());
  high_pass_filter(x.samples(), spec.alpha(), out);
  return MonoClip(std::move(out), x.sample_rate_hz());
}

StereoClip fake_stereo_copy(const MonoClip& x) {
  std::vector<double> samples(x.samples().begin(), x.samples().end());
  return StereoClip(samples, samples, x.sample_rate_hz());
}

StereoClip fake_stereo_haas(const MonoClip& x, const FilterSpec& spec,
                            FakedSide side) {
  const MonoClip filtered = high_pass_filter(x, spec);
  std::vector<double> original(x.samples().begin(), x.samples().end());
  std::vector<double> faked(filtered.samples().begin(),
                            filtered.samples().end());
  if (side == FakedSide::kRight) {
    return StereoClip(std::move(original), std::move(faked),
                      x.sample_rate_hz());
  }
  return StereoClip(std::move(faked), std::move(original), x.sample_rate_hz());
}

bool is_channel_copy(const StereoClip& y, double tolerance) {
  const auto l = y.left();
  const auto r = y.right();
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (std::abs(l[i] - r[i]) > tolerance) return false;
  }
  return true;
}

}  // namespace stereofake
