#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stereofake/audio_io.hpp"

namespace stereofake {

// Framing in samples. The FFT runs at the next power of two >= frame_len with
// zero padding. Samples are multiplied by input_scale before pre-emphasis;
// the default analyzes 16-bit PCM integer units, where log10(1 + E) is
// effectively log10(E) for audible content.
struct FrameConfig {
  std::size_t frame_len = 1103;
  std::size_t hop_len = 441;
  double preemph_coeff = 0.95;
  double input_scale = 32767.0;

  void validate() const;
  std::size_t fft_len() const;
};

struct MelConfig {
  std::size_t num_filters = 40;
  double min_hz = 0.0;
  double max_hz = 22050.0;
  std::size_t num_coeffs = 40;

  void validate(int sample_rate_hz) const;
};

// Rate-independent feature parameters. A detector stores these so clips of any
// supported rate resolve to the same analysis durations.
struct FeatureSettings {
  double frame_s = 0.025;
  double hop_s = 0.010;
  std::size_t num_filters = 40;
  double min_hz = 0.0;
  double max_hz = 0.0;  // 0 selects the Nyquist frequency of each clip
  std::size_t num_coeffs = 40;
  double input_scale = 32767.0;

  FrameConfig frame_config(int sample_rate_hz) const;
  MelConfig mel_config(int sample_rate_hz) const;
  std::size_t dimension() const { return 2 * num_coeffs; }

  friend bool operator==(const FeatureSettings&,
                         const FeatureSettings&) = default;
};

enum class Label { kReal, kFake };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

// Per-clip feature: mean MFCC vector of the left channel followed by that of
// the right channel.
struct ClipFeature {
  std::vector<double> values;
  std::optional<Label> label;
  std::string provenance;
};

// x'(i) = x(i) - coeff * x(i-1), with x(-1) = 0.
std::vector<double> pre_emphasize(std::span<const double> x,
                                  double coeff = 0.95);

// 0.54 - 0.46 cos(2 pi n / (N - 1)); throws for N < 2 or n >= N.
double hamming_window(std::size_t n, std::size_t window_len);

// Hamming-windowed frames; frame k covers [k*hop, k*hop + frame_len).
std::vector<std::vector<double>> frame_signal(std::span<const double> x,
                                              const FrameConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular unit-peak filters with centers equally spaced in mel between
// min_hz and max_hz, sampled at FFT bin frequencies k * rate / fft_len.
class MelFilterbank {
 public:
  MelFilterbank(const MelConfig& mel, int sample_rate_hz, std::size_t fft_len);

  std::size_t num_filters() const { return filters_.size(); }
  std::size_t num_bins() const { return num_bins_; }
  double center_hz(std::size_t b) const { return edges_hz_[b + 1]; }
  double lower_hz(std::size_t b) const { return edges_hz_[b]; }
  double upper_hz(std::size_t b) const { return edges_hz_[b + 2]; }
  double weight(std::size_t b, std::size_t bin) const;

  // E(b) = sum_k power[k] * tri_b(f_k) over bins 0 .. fft_len/2.
  void apply(std::span<const double> power, std::span<double> energies) const;

 private:
  struct Filter {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };
  std::vector<Filter> filters_;
  std::vector<double> edges_hz_;
  std::size_t num_bins_;
};

// Mel energies of one windowed frame, FFT at the next power of two.
std::vector<double> mel_energies(std::span<const double> frame,
                                 const MelConfig& mel, int sample_rate_hz);

// C(l) = sum_b log10(1 + E(b)) cos(l pi (b + 0.5) / B), l = 0 .. L-1.
std::vector<double> mfcc_frame(std::span<const double> energies,
                               const MelConfig& mel);

// Reusable per-thread extraction state (FFT plan, buffers, filterbank and DCT
// tables per sample rate). Not safe to share between threads.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureSettings settings = {});
  FeatureExtractor(const FrameConfig& frame, const MelConfig& mel);
  ~FeatureExtractor();
  FeatureExtractor(FeatureExtractor&&) noexcept;
  FeatureExtractor& operator=(FeatureExtractor&&) noexcept;

  // Mean MFCC vector over all frames of one channel.
  std::vector<double> channel_mfcc(std::span<const double> x,
                                   int sample_rate_hz);
  ClipFeature extract(const StereoClip& clip);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ClipFeature extract_clip_feature(const StereoClip& clip,
                                 const FrameConfig& frame,
                                 const MelConfig& mel);

enum class Execution { kSerial, kParallel };

// Extracts features for clips 0 .. count-1 produced by load(i). Results are in
// index order for either execution mode, and bit-identical between them. If
// any load or extraction throws, the exception from the lowest index is
// rethrown after the batch finishes.
std::vector<ClipFeature> extract_features(
    std::size_t count, const std::function<StereoClip(std::size_t)>& load,
    const FeatureSettings& settings, Execution exec = Execution::kParallel);

std::vector<ClipFeature> extract_features(std::span<const StereoClip> clips,
                                          const FeatureSettings& settings,
                                          Execution exec = Execution::kParallel);

// Box-plot summary of one feature component for one label group.
struct ComponentStats {
  std::size_t component = 0;  // index within the channel
  std::string channel;        // "left" or "right"
  std::string label;          // "real", "fake" or "unlabeled"
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

// Linear-interpolation quantile (R type 7) of an ascending-sorted sequence.
double sorted_quantile(std::span<const double> sorted, double q);

std::vector<ComponentStats> feature_stats(std::span<const ClipFeature> features);
void dump_feature_stats(std::span<const ClipFeature> features,
                        const std::filesystem::path& path);

}  // namespace stereofake
