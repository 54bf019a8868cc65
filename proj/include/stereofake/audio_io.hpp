#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stereofake/error.hpp"

namespace stereofake {

// Single-channel audio. Samples are finite reals, nominally in [-1, 1];
// values decoded from PCM are clamped into that range, but intermediate DSP
// results (e.g. a filtered channel) may overshoot until they are written.
class MonoClip {
 public:
  MonoClip(std::vector<double> samples, int sample_rate_hz);

  std::span<const double> samples() const { return samples_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  std::size_t size() const { return samples_.size(); }
  double duration_s() const {
    return static_cast<double>(samples_.size()) / sample_rate_hz_;
  }

  friend bool operator==(const MonoClip&, const MonoClip&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_hz_;
};

// Two-channel audio with equal-length channels.
class StereoClip {
 public:
  StereoClip(std::vector<double> left, std::vector<double> right,
             int sample_rate_hz);

  std::span<const double> left() const { return left_; }
  std::span<const double> right() const { return right_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  std::size_t size() const { return left_.size(); }
  double duration_s() const {
    return static_cast<double>(left_.size()) / sample_rate_hz_;
  }

  // Returns a copy with left and right exchanged.
  StereoClip swapped() const;

  friend bool operator==(const StereoClip&, const StereoClip&) = default;

 private:
  std::vector<double> left_;
  std::vector<double> right_;
  int sample_rate_hz_;
};

using Clip = std::variant<MonoClip, StereoClip>;

// Rates used by the reference corpora. Other rates are accepted for ad-hoc
// detection; callers may warn on them.
bool is_corpus_rate(int sample_rate_hz);

enum class WavErrorKind {
  kNotRiff,
  kMalformedHeader,
  kUnsupportedCodec,
  kUnsupportedBitDepth,
  kUnsupportedChannels,
  kEmptyData,
};

std::string_view to_string(WavErrorKind kind);

class WavError : public ParseError {
 public:
  WavError(WavErrorKind kind, const std::string& what)
      : ParseError(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  WavErrorKind kind() const { return kind_; }

 private:
  WavErrorKind kind_;
};

// PCM-16 sample <-> amplitude. Decoding divides by 32767 and clamps, so
// -32768 maps to -1.0 and every encoded value decodes back to the same code.
double pcm16_to_amplitude(std::int16_t pcm);
std::int16_t amplitude_to_pcm16(double amplitude);

// In-memory RIFF/WAVE codec: PCM-16 little-endian, mono or interleaved stereo.
// Chunks other than "fmt " and "data" are skipped on decode and never emitted.
Clip decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const MonoClip& clip);
std::vector<std::uint8_t> encode_wav(const StereoClip& clip);

Clip read_wav(const std::filesystem::path& path);
// Reads a WAV that must be stereo; throws ParseError for mono input.
StereoClip read_stereo_wav(const std::filesystem::path& path);
void write_wav(const MonoClip& clip, const std::filesystem::path& path);
void write_wav(const StereoClip& clip, const std::filesystem::path& path);

// Consecutive non-overlapping windows of floor(seconds * rate) samples. A
// trailing remainder shorter than one window is dropped.
std::vector<MonoClip> segment_clip(const MonoClip& clip, double seconds);
std::vector<StereoClip> segment_clip(const StereoClip& clip, double seconds);

enum class MonoPolicy { kLeft, kRight, kAverage };

std::string_view to_string(MonoPolicy policy);
MonoPolicy parse_mono_policy(std::string_view text);

MonoClip to_mono(const StereoClip& clip, MonoPolicy policy = MonoPolicy::kLeft);

}  // namespace stereofake
