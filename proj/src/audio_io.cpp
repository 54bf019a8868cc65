#include "stereofake/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace stereofake {
namespace {

void check_samples(std::span<const double> samples, const char* what) {
  if (samples.empty()) {
    throw InvalidArgument(std::string(what) + ": clip has no samples");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) {
      throw InvalidArgument(std::string(what) + ": non-finite sample");
    }
  }
}

void check_rate(int sample_rate_hz) {
  if (sample_rate_hz <= 0) {
    throw InvalidArgument("sample rate must be positive, got " +
                          std::to_string(sample_rate_hz));
  }
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }
}

void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

std::vector<std::uint8_t> encode_interleaved(
    std::span<const std::span<const double>> channels, int sample_rate_hz) {
  const auto num_channels = static_cast<std::uint16_t>(channels.size());
  const std::size_t frames = channels.front().size();
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(frames * num_channels * 2);
  const std::uint16_t block_align = num_channels * 2;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, num_channels);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * block_align);
  put_u16(out, block_align);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : channels) {
      put_u16(out, static_cast<std::uint16_t>(amplitude_to_pcm16(ch[i])));
    }
  }
  return out;
}

void write_bytes(const std::vector<std::uint8_t>& bytes,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

template <typename ClipT>
std::vector<ClipT> segment_impl(const ClipT& clip, double seconds,
                                auto make_segment) {
  if (!(seconds > 0.0)) {
    throw InvalidArgument("segment length must be positive");
  }
  const auto window = static_cast<std::size_t>(
      std::floor(seconds * clip.sample_rate_hz()));
  std::vector<ClipT> out;
  if (window == 0) return out;
  for (std::size_t start = 0; start + window <= clip.size(); start += window) {
    out.push_back(make_segment(start, window));
  }
  return out;
}

}  // namespace

MonoClip::MonoClip(std::vector<double> samples, int sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
  check_rate(sample_rate_hz_);
  check_samples(samples_, "MonoClip");
}

StereoClip::StereoClip(std::vector<double> left, std::vector<double> right,
                       int sample_rate_hz)
    : left_(std::move(left)),
      right_(std::move(right)),
      sample_rate_hz_(sample_rate_hz) {
  check_rate(sample_rate_hz_);
  if (left_.size() != right_.size()) {
    throw InvalidArgument("StereoClip: channel lengths differ (" +
                          std::to_string(left_.size()) + " vs " +
                          std::to_string(right_.size()) + ")");
  }
  check_samples(left_, "StereoClip left");
  check_samples(right_, "StereoClip right");
}

StereoClip StereoClip::swapped() const {
  return StereoClip(right_, left_, sample_rate_hz_);
}

bool is_corpus_rate(int sample_rate_hz) {
  return sample_rate_hz == 44100 || sample_rate_hz == 48000;
}

std::string_view to_string(WavErrorKind kind) {
  switch (kind) {
    case WavErrorKind::kNotRiff: return "not a RIFF/WAVE file";
    case WavErrorKind::kMalformedHeader: return "malformed WAV header";
    case WavErrorKind::kUnsupportedCodec: return "unsupported WAV codec";
    case WavErrorKind::kUnsupportedBitDepth: return "unsupported bit depth";
    case WavErrorKind::kUnsupportedChannels: return "unsupported channel count";
    case WavErrorKind::kEmptyData: return "empty WAV data";
  }
  return "WAV error";
}

double pcm16_to_amplitude(std::int16_t pcm) {
  return std::max(-1.0, static_cast<double>(pcm) / 32767.0);
}

std::int16_t amplitude_to_pcm16(double amplitude) {
  const double scaled = std::round(amplitude * 32767.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

Clip decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") ||
      !tag_is(bytes, 8, "WAVE")) {
    throw WavError(WavErrorKind::kNotRiff, "missing RIFF/WAVE signature");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw WavError(WavErrorKind::kMalformedHeader,
                     "chunk extends past end of file");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) {
        throw WavError(WavErrorKind::kMalformedHeader, "fmt chunk too short");
      }
      const std::uint16_t format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      const std::uint16_t bits = read_u16(bytes, body + 14);
      if (format != 1) {
        throw WavError(WavErrorKind::kUnsupportedCodec,
                       "audio format " + std::to_string(format) +
                           " (only PCM = 1)");
      }
      if (bits != 16) {
        throw WavError(WavErrorKind::kUnsupportedBitDepth,
                       std::to_string(bits) + " bits (only 16)");
      }
      if (channels != 1 && channels != 2) {
        throw WavError(WavErrorKind::kUnsupportedChannels,
                       std::to_string(channels) + " channels");
      }
      if (rate == 0) {
        throw WavError(WavErrorKind::kMalformedHeader, "zero sample rate");
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
      break;
    }
    // Chunks are word-aligned.
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) {
    throw WavError(WavErrorKind::kMalformedHeader, "no fmt chunk before data");
  }
  if (!have_data) {
    throw WavError(WavErrorKind::kMalformedHeader, "no data chunk");
  }
  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = data.size() / frame_bytes;
  if (frames == 0) {
    throw WavError(WavErrorKind::kEmptyData, "data chunk holds no samples");
  }

  std::vector<std::vector<double>> out(channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const auto raw = static_cast<std::int16_t>(
          read_u16(data, i * frame_bytes + 2 * c));
      out[c][i] = pcm16_to_amplitude(raw);
    }
  }
  const int sample_rate = static_cast<int>(rate);
  if (channels == 1) return MonoClip(std::move(out[0]), sample_rate);
  return StereoClip(std::move(out[0]), std::move(out[1]), sample_rate);
}

std::vector<std::uint8_t> encode_wav(const MonoClip& clip) {
  const std::span<const double> channels[] = {clip.samples()};
  return encode_interleaved(channels, clip.sample_rate_hz());
}

std::vector<std::uint8_t> encode_wav(const StereoClip& clip) {
  const std::span<const double> channels[] = {clip.left(), clip.right()};
  return encode_interleaved(channels, clip.sample_rate_hz());
}

Clip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  try {
    return decode_wav(bytes);
  } catch (const WavError& e) {
    throw WavError(e.kind(), path.string());
  }
}

StereoClip read_stereo_wav(const std::filesystem::path& path) {
  Clip clip = read_wav(path);
  if (auto* stereo = std::get_if<StereoClip>(&clip)) return std::move(*stereo);
  throw ParseError("expected a stereo WAV: " + path.string());
}

void write_wav(const MonoClip& clip, const std::filesystem::path& path) {
  write_bytes(encode_wav(clip), path);
}

void write_wav(const StereoClip& clip, const std::filesystem::path& path) {
  write_bytes(encode_wav(clip), path);
}

std::vector<MonoClip> segment_clip(const MonoClip& clip, double seconds) {
  const auto s = clip.samples();
  return segment_impl(clip, seconds, [&](std::size_t start, std::size_t n) {
    return MonoClip({s.begin() + start, s.begin() + start + n},
                    clip.sample_rate_hz());
  });
}

std::vector<StereoClip> segment_clip(const StereoClip& clip, double seconds) {
  const auto l = clip.left();
  const auto r = clip.right();
  return segment_impl(clip, seconds, [&](std::size_t start, std::size_t n) {
    return StereoClip({l.begin() + start, l.begin() + start + n},
                      {r.begin() + start, r.begin() + start + n},
                      clip.sample_rate_hz());
  });
}

std::string_view to_string(MonoPolicy policy) {
  switch (policy) {
    case MonoPolicy::kLeft: return "left";
    case MonoPolicy::kRight: return "right";
    case MonoPolicy::kAverage: return "average";
  }
  return "left";
}

MonoPolicy parse_mono_policy(std::string_view text) {
  if (text == "left" || text == "left-channel") return MonoPolicy::kLeft;
  if (text == "right" || text == "right-channel") return MonoPolicy::kRight;
  if (text == "average") return MonoPolicy::kAverage;
  throw InvalidArgument("unknown mono policy: " + std::string(text));
}

MonoClip to_mono(const StereoClip& clip, MonoPolicy policy) {
  const auto l = clip.left();
  const auto r = clip.right();
  switch (policy) {
    case MonoPolicy::kLeft:
      return MonoClip({l.begin(), l.end()}, clip.sample_rate_hz());
    case MonoPolicy::kRight:
      return MonoClip({r.begin(), r.end()}, clip.sample_rate_hz());
    case MonoPolicy::kAverage: {
      std::vector<double> mixed(l.size());
      for (std::size_t i = 0; i < l.size(); ++i) mixed[i] = 0.5 * (l[i] + r[i]);
      return MonoClip(std::move(mixed), clip.sample_rate_hz());
    }
  }
  throw InvalidArgument("unknown mono policy");
}

}  // namespace stereofake
