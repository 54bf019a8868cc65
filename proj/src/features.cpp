#include "stereofake/features.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numbers>

#include "power_spectrum.hpp"
#include "text_util.hpp"

namespace stereofake {
namespace {

double dct_basis(std::size_t l, std::size_t b, std::size_t num_filters) {
  return std::cos(static_cast<double>(l) * std::numbers::pi /
                  static_cast<double>(num_filters) *
                  (static_cast<double>(b) + 0.5));
}

// Writes one windowed frame into the head of the FFT input buffer; the tail
// stays zero.
void load_frame(std::span<const double> x, std::size_t start,
                std::span<const double> window, std::span<double> fft_in) {
  const std::size_t n = window.size();
  for (std::size_t i = 0; i < n; ++i) fft_in[i] = x[start + i] * window[i];
  std::fill(fft_in.begin() + static_cast<std::ptrdiff_t>(n), fft_in.end(), 0.0);
}

std::size_t frame_count(std::size_t len, const FrameConfig& cfg) {
  if (len < cfg.frame_len) {
    throw InvalidArgument("signal of " + std::to_string(len) +
                          " samples is shorter than one frame (" +
                          std::to_string(cfg.frame_len) + ")");
  }
  return (len - cfg.frame_len) / cfg.hop_len + 1;
}

std::vector<double> window_table(std::size_t frame_len) {
  std::vector<double> w(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n) w[n] = hamming_window(n, frame_len);
  return w;
}

}  // namespace

void FrameConfig::validate() const {
  if (frame_len < 2) throw InvalidArgument("frame_len must be at least 2");
  if (hop_len == 0 || hop_len > frame_len) {
    throw InvalidArgument("hop_len must satisfy 0 < hop_len <= frame_len");
  }
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) {
    throw InvalidArgument("input_scale must be positive");
  }
}

std::size_t FrameConfig::fft_len() const { return detail::next_pow2(frame_len); }

void MelConfig::validate(int sample_rate_hz) const {
  if (num_filters == 0) throw InvalidArgument("num_filters must be positive");
  if (num_coeffs == 0 || num_coeffs > num_filters) {
    throw InvalidArgument("num_coeffs must satisfy 0 < num_coeffs <= num_filters");
  }
  if (!(min_hz >= 0.0) || !(max_hz > min_hz)) {
    throw InvalidArgument("mel band must satisfy 0 <= min_hz < max_hz");
  }
  if (max_hz > sample_rate_hz / 2.0) {
    throw InvalidArgument("max_hz exceeds the Nyquist frequency");
  }
}

FrameConfig FeatureSettings::frame_config(int sample_rate_hz) const {
  FrameConfig cfg;
  cfg.frame_len = static_cast<std::size_t>(std::lround(frame_s * sample_rate_hz));
  cfg.hop_len = static_cast<std::size_t>(std::lround(hop_s * sample_rate_hz));
  cfg.input_scale = input_scale;
  cfg.validate();
  return cfg;
}

MelConfig FeatureSettings::mel_config(int sample_rate_hz) const {
  MelConfig mel;
  mel.num_filters = num_filters;
  mel.min_hz = min_hz;
  mel.max_hz = max_hz > 0.0 ? max_hz : sample_rate_hz / 2.0;
  mel.num_coeffs = num_coeffs;
  mel.validate(sample_rate_hz);
  return mel;
}

std::string_view to_string(Label label) {
  return label == Label::kReal ? "real" : "fake";
}

Label parse_label(std::string_view text) {
  if (text == "real") return Label::kReal;
  if (text == "fake") return Label::kFake;
  throw ParseError("label must be real or fake, got '" + std::string(text) + "'");
}

std::vector<double> pre_emphasize(std::span<const double> x, double coeff) {
  if (x.empty()) throw InvalidArgument("pre_emphasize: empty input");
  std::vector<double> out(x.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] - coeff * prev;
    prev = x[i];
  }
  return out;
}

double hamming_window(std::size_t n, std::size_t window_len) {
  if (window_len < 2) throw InvalidArgument("window length must be >= 2");
  if (n >= window_len) throw InvalidArgument("window index out of range");
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(window_len - 1));
}

std::vector<std::vector<double>> frame_signal(std::span<const double> x,
                                              const FrameConfig& cfg) {
  cfg.validate();
  const std::size_t count = frame_count(x.size(), cfg);
  const std::vector<double> window = window_table(cfg.frame_len);
  std::vector<std::vector<double>> frames(count,
                                          std::vector<double>(cfg.frame_len));
  for (std::size_t k = 0; k < count; ++k) {
    load_frame(x, k * cfg.hop_len, window, frames[k]);
  }
  return frames;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(const MelConfig& mel, int sample_rate_hz,
                             std::size_t fft_len)
    : num_bins_(fft_len / 2 + 1) {
  mel.validate(sample_rate_hz);
  const std::size_t points = mel.num_filters + 2;
  const double lo = hz_to_mel(mel.min_hz);
  const double hi = hz_to_mel(mel.max_hz);
  edges_hz_.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    edges_hz_[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                      static_cast<double>(points - 1));
  }
  edges_hz_.front() = mel.min_hz;
  edges_hz_.back() = mel.max_hz;

  const double bin_hz = static_cast<double>(sample_rate_hz) /
                        static_cast<double>(fft_len);
  filters_.resize(mel.num_filters);
  for (std::size_t b = 0; b < mel.num_filters; ++b) {
    const double left = edges_hz_[b];
    const double center = edges_hz_[b + 1];
    const double right = edges_hz_[b + 2];
    Filter& f = filters_[b];
    bool started = false;
    for (std::size_t k = 0; k < num_bins_; ++k) {
      const double hz = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (hz >= left && hz <= center) {
        w = center > left ? (hz - left) / (center - left) : 1.0;
      } else if (hz > center && hz <= right) {
        w = (right - hz) / (right - center);
      }
      if (w > 0.0) {
        if (!started) {
          f.first_bin = k;
          started = true;
        }
        f.weights.resize(k - f.first_bin + 1, 0.0);
        f.weights.back() = w;
      }
    }
  }
}

double MelFilterbank::weight(std::size_t b, std::size_t bin) const {
  const Filter& f = filters_.at(b);
  if (bin < f.first_bin || bin >= f.first_bin + f.weights.size()) return 0.0;
  return f.weights[bin - f.first_bin];
}

void MelFilterbank::apply(std::span<const double> power,
                          std::span<double> energies) const {
  for (std::size_t b = 0; b < filters_.size(); ++b) {
    const Filter& f = filters_[b];
    double sum = 0.0;
    for (std::size_t i = 0; i < f.weights.size(); ++i) {
      sum += power[f.first_bin + i] * f.weights[i];
    }
    energies[b] = sum;
  }
}

std::vector<double> mel_energies(std::span<const double> frame,
                                 const MelConfig& mel, int sample_rate_hz) {
  if (frame.empty()) throw InvalidArgument("mel_energies: empty frame");
  detail::PowerSpectrum spectrum(detail::next_pow2(frame.size()));
  const MelFilterbank bank(mel, sample_rate_hz, spectrum.fft_len());
  auto in = spectrum.input();
  std::copy(frame.begin(), frame.end(), in.begin());
  std::vector<double> power(spectrum.num_bins());
  spectrum.compute(power);
  std::vector<double> energies(mel.num_filters);
  bank.apply(power, energies);
  return energies;
}

std::vector<double> mfcc_frame(std::span<const double> energies,
                               const MelConfig& mel) {
  const std::size_t num_filters = energies.size();
  if (num_filters != mel.num_filters) {
    throw InvalidArgument("mfcc_frame: expected " +
                          std::to_string(mel.num_filters) + " energies");
  }
  std::vector<double> log_e(num_filters);
  for (std::size_t b = 0; b < num_filters; ++b) {
    if (energies[b] < 0.0) throw InvalidArgument("mfcc_frame: negative energy");
    log_e[b] = std::log10(1.0 + energies[b]);
  }
  std::vector<double> coeffs(mel.num_coeffs);
  for (std::size_t l = 0; l < mel.num_coeffs; ++l) {
    double sum = 0.0;
    for (std::size_t b = 0; b < num_filters; ++b) {
      sum += log_e[b] * dct_basis(l, b, num_filters);
    }
    coeffs[l] = sum;
  }
  return coeffs;
}

struct FeatureExtractor::Impl {
  struct RateState {
    FrameConfig frame;
    MelConfig mel;
    std::vector<double> window;
    std::unique_ptr<detail::PowerSpectrum> spectrum;
    MelFilterbank bank;
    std::vector<double> dct;  // num_coeffs x num_filters, row-major
    std::vector<double> power;
    std::vector<double> energies;
    std::vector<double> log_e;

    RateState(const FrameConfig& f, const MelConfig& m, int rate)
        : frame(f),
          mel(m),
          window(window_table(f.frame_len)),
          spectrum(std::make_unique<detail::PowerSpectrum>(f.fft_len())),
          bank(m, rate, f.fft_len()),
          dct(m.num_coeffs * m.num_filters),
          power(f.fft_len() / 2 + 1),
          energies(m.num_filters),
          log_e(m.num_filters) {
      for (std::size_t l = 0; l < m.num_coeffs; ++l) {
        for (std::size_t b = 0; b < m.num_filters; ++b) {
          dct[l * m.num_filters + b] = dct_basis(l, b, m.num_filters);
        }
      }
    }
  };

  std::optional<FeatureSettings> settings;
  std::optional<std::pair<FrameConfig, MelConfig>> fixed;
  std::map<int, RateState> states;

  RateState& state_for(int rate) {
    auto it = states.find(rate);
    if (it != states.end()) return it->second;
    FrameConfig frame;
    MelConfig mel;
    if (fixed) {
      frame = fixed->first;
      mel = fixed->second;
      frame.validate();
      mel.validate(rate);
    } else {
      frame = settings->frame_config(rate);
      mel = settings->mel_config(rate);
    }
    return states.try_emplace(rate, frame, mel, rate).first->second;
  }
};

FeatureExtractor::FeatureExtractor(FeatureSettings settings)
    : impl_(std::make_unique<Impl>()) {
  if (settings.num_coeffs == 0 || settings.num_coeffs > settings.num_filters) {
    throw InvalidArgument("num_coeffs must satisfy 0 < num_coeffs <= num_filters");
  }
  impl_->settings = settings;
}

FeatureExtractor::FeatureExtractor(const FrameConfig& frame,
                                   const MelConfig& mel)
    : impl_(std::make_unique<Impl>()) {
  frame.validate();
  impl_->fixed.emplace(frame, mel);
}

FeatureExtractor::~FeatureExtractor() = default;
FeatureExtractor::FeatureExtractor(FeatureExtractor&&) noexcept = default;
FeatureExtractor& FeatureExtractor::operator=(FeatureExtractor&&) noexcept =
    default;

std::vector<double> FeatureExtractor::channel_mfcc(std::span<const double> x,
                                                   int sample_rate_hz) {
  Impl::RateState& st = impl_->state_for(sample_rate_hz);
  const std::size_t frames = frame_count(x.size(), st.frame);
  std::vector<double> scaled(x.begin(), x.end());
  for (double& v : scaled) v *= st.frame.input_scale;
  const std::vector<double> emphasized =
      pre_emphasize(scaled, st.frame.preemph_coeff);
  const std::size_t num_filters = st.mel.num_filters;
  const std::size_t num_coeffs = st.mel.num_coeffs;

  std::vector<double> sum(num_coeffs, 0.0);
  for (std::size_t k = 0; k < frames; ++k) {
    load_frame(emphasized, k * st.frame.hop_len, st.window,
               st.spectrum->input());
    st.spectrum->compute(st.power);
    st.bank.apply(st.power, st.energies);
    for (std::size_t b = 0; b < num_filters; ++b) {
      st.log_e[b] = std::log10(1.0 + st.energies[b]);
    }
    for (std::size_t l = 0; l < num_coeffs; ++l) {
      const double* row = &st.dct[l * num_filters];
      double c = 0.0;
      for (std::size_t b = 0; b < num_filters; ++b) c += st.log_e[b] * row[b];
      sum[l] += c;
    }
  }
  for (double& v : sum) v /= static_cast<double>(frames);
  return sum;
}

ClipFeature FeatureExtractor::extract(const StereoClip& clip) {
  ClipFeature feature;
  feature.values = channel_mfcc(clip.left(), clip.sample_rate_hz());
  const std::vector<double> right =
      channel_mfcc(clip.right(), clip.sample_rate_hz());
  feature.values.insert(feature.values.end(), right.begin(), right.end());
  return feature;
}

ClipFeature extract_clip_feature(const StereoClip& clip,
                                 const FrameConfig& frame,
                                 const MelConfig& mel) {
  FeatureExtractor extractor(frame, mel);
  return extractor.extract(clip);
}

std::vector<ClipFeature> extract_features(
    std::size_t count, const std::function<StereoClip(std::size_t)>& load,
    const FeatureSettings& settings, Execution exec) {
  std::vector<ClipFeature> out(count);
  std::vector<std::exception_ptr> errors(count);

  const auto run_one = [&](FeatureExtractor& extractor, std::size_t i) {
    try {
      out[i] = extractor.extract(load(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  // Validates settings before entering a parallel region.
  FeatureExtractor extractor(settings);
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < count; ++i) run_one(extractor, i);
  } else {
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel
    {
      FeatureExtractor local(settings);
#pragma omp for schedule(dynamic, 4)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        run_one(local, static_cast<std::size_t>(i));
      }
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<ClipFeature> extract_features(std::span<const StereoClip> clips,
                                          const FeatureSettings& settings,
                                          Execution exec) {
  return extract_features(
      clips.size(), [&](std::size_t i) { return clips[i]; }, settings, exec);
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of empty sequence");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<ComponentStats> feature_stats(std::span<const ClipFeature> features) {
  if (features.empty()) throw InvalidArgument("feature_stats: no features");
  const std::size_t dim = features.front().values.size();
  if (dim == 0 || dim % 2 != 0) {
    throw InvalidArgument("feature_stats: feature dimension must be even");
  }
  for (const auto& f : features) {
    if (f.values.size() != dim) {
      throw InvalidArgument("feature_stats: inconsistent feature dimensions");
    }
  }

  // Group order: real, fake, unlabeled.
  const auto group_of = [](const ClipFeature& f) {
    return f.label ? static_cast<int>(*f.label) : 2;
  };
  static constexpr const char* kGroupNames[] = {"real", "fake", "unlabeled"};
  bool present[3] = {false, false, false};
  for (const auto& f : features) present[group_of(f)] = true;

  const std::size_t per_channel = dim / 2;
  std::vector<ComponentStats> rows;
  std::vector<double> column;
  for (std::size_t ch = 0; ch < 2; ++ch) {
    for (std::size_t c = 0; c < per_channel; ++c) {
      for (int g = 0; g < 3; ++g) {
        if (!present[g]) continue;
        column.clear();
        for (const auto& f : features) {
          if (group_of(f) == g) column.push_back(f.values[ch * per_channel + c]);
        }
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (double v : column) sum += v;
        ComponentStats s;
        s.component = c;
        s.channel = ch == 0 ? "left" : "right";
        s.label = kGroupNames[g];
        s.min = column.front();
        s.q1 = sorted_quantile(column, 0.25);
        s.median = sorted_quantile(column, 0.5);
        s.q3 = sorted_quantile(column, 0.75);
        s.max = column.back();
        s.mean = sum / static_cast<double>(column.size());
        rows.push_back(std::move(s));
      }
    }
  }
  return rows;
}

void dump_feature_stats(std::span<const ClipFeature> features,
                        const std::filesystem::path& path) {
  const auto rows = feature_stats(features);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "component,channel,label,min,q1,median,q3,max,mean\n";
  using detail::format_double;
  for (const auto& r : rows) {
    out << r.component << ',' << r.channel << ',' << r.label << ','
        << format_double(r.min) << ',' << format_double(r.q1) << ','
        << format_double(r.median) << ',' << format_double(r.q3) << ','
        << format_double(r.max) << ',' << format_double(r.mean) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace stereofake
