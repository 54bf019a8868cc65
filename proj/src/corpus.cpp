#include "stereofake/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>

#include "text_util.hpp"

namespace stereofake {
namespace fs = std::filesystem;

namespace {

std::string sanitize_id(std::string id) {
  for (char& ch : id) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' ||
                    ch == '.';
    if (!ok) ch = '_';
  }
  return id;
}

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) {
    s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  }
  return s;
}

void validate_cutoffs(const std::vector<double>& cutoffs, const char* what) {
  for (double c : cutoffs) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw InvalidArgument(std::string(what) + " cut-offs must be positive");
    }
  }
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// One-pole low-pass, used to band-limit synthetic noise.
void low_pass_inplace(std::vector<double>& x, double cutoff_hz, int rate) {
  const double a = std::exp(-2.0 * std::numbers::pi * cutoff_hz / rate);
  double state = 0.0;
  for (double& v : x) {
    state = (1.0 - a) * v + a * state;
    v = state;
  }
}

std::vector<double> synth_channel(std::mt19937_64& rng, std::size_t n,
                                  int rate) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> noise(n);
  for (double& v : noise) v = gauss(rng);
  const double noise_cutoff = 1000.0 + 7000.0 * unit(rng);
  low_pass_inplace(noise, noise_cutoff, rate);
  low_pass_inplace(noise, noise_cutoff, rate);
  const double noise_gain = 0.2 + 0.8 * unit(rng);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = noise_gain * noise[i];

  const int tones = 2 + static_cast<int>(rng() % 4);
  for (int t = 0; t < tones; ++t) {
    // Log-uniform over 300 Hz .. 4 kHz, above the band the forgery filter
    // attenuates most.
    const double freq = 300.0 * std::pow(4000.0 / 300.0, unit(rng));
    const double amp = 0.05 + 0.45 * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double w = 2.0 * std::numbers::pi * freq / rate;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += amp * std::sin(w * static_cast<double>(i) + phase);
    }
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : out) v *= 0.9 / peak;
  }
  return out;
}

struct SourcePlan {
  fs::path path;
  std::string id;
  Split split = Split::kTrain;
};

}  // namespace

std::string_view to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw ParseError("split must be train or test, got '" + std::string(text) + "'");
}

std::string_view to_string(ForgeryMethod method) {
  switch (method) {
    case ForgeryMethod::kNone: return "none";
    case ForgeryMethod::kHaas: return "haas";
    case ForgeryMethod::kCopy: return "copy";
  }
  return "none";
}

ForgeryMethod parse_forgery_method(std::string_view text) {
  if (text == "none") return ForgeryMethod::kNone;
  if (text == "haas") return ForgeryMethod::kHaas;
  if (text == "copy") return ForgeryMethod::kCopy;
  throw ParseError("unknown forgery method '" + std::string(text) + "'");
}

void CorpusManifest::validate_schema() const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    const std::string where = "manifest row " + std::to_string(i + 1) + " (" +
                              e.path + "): ";
    if (e.path.empty()) throw ParseError(where + "empty path");
    if (e.source_clip_id.empty()) throw ParseError(where + "empty source_clip_id");
    if (e.sample_rate_hz <= 0) throw ParseError(where + "invalid sample rate");
    if (e.label == Label::kReal) {
      if (e.method != ForgeryMethod::kNone || e.faked_side || e.cutoff_hz) {
        throw ParseError(where + "real entries carry no forgery parameters");
      }
      continue;
    }
    if (!e.faked_side) throw ParseError(where + "fake entry without faked_side");
    switch (e.method) {
      case ForgeryMethod::kNone:
        throw ParseError(where + "fake entry without a forgery method");
      case ForgeryMethod::kHaas:
        if (!e.cutoff_hz) throw ParseError(where + "haas fake without cutoff_hz");
        break;
      case ForgeryMethod::kCopy:
        if (e.cutoff_hz) throw ParseError(where + "copy fake with cutoff_hz");
        break;
    }
  }
}

void CorpusManifest::validate_files() const {
  std::string missing;
  std::size_t count = 0;
  for (const auto& e : entries) {
    if (!fs::exists(resolve(e))) {
      missing += "\n  " + resolve(e).string();
      ++count;
    }
  }
  if (count > 0) {
    throw ParseError("manifest references " + std::to_string(count) +
                     " missing file(s):" + missing);
  }
}

std::string serialize_manifest(const CorpusManifest& m) {
  std::string out;
  out += "# corpus_id=" + m.corpus_id + "\n";
  out += "# mono_policy=" + std::string(to_string(m.mono_policy)) + "\n";
  out += "# split_ratio=" + detail::format_short(m.split_ratio) + "\n";
  out += "# seed=" + std::to_string(m.seed) + "\n";
  out += kManifestHeader;
  out += '\n';
  for (const auto& e : m.entries) {
    out += e.path;
    out += ',';
    out += to_string(e.label);
    out += ',';
    out += to_string(e.method);
    out += ',';
    if (e.faked_side) out += to_string(*e.faked_side);
    out += ',';
    if (e.cutoff_hz) out += detail::format_short(*e.cutoff_hz);
    out += ',';
    out += to_string(e.split);
    out += ',';
    out += e.source_clip_id;
    out += ',';
    out += std::to_string(e.sample_rate_hz);
    out += ',';
    out += detail::format_short(e.duration_s);
    out += '\n';
  }
  return out;
}

CorpusManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  CorpusManifest m;
  m.base_dir = base_dir;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen && line.front() == '#') {
      const std::string_view body = detail::trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = body.substr(0, eq);
      const std::string_view value = body.substr(eq + 1);
      if (key == "corpus_id") {
        m.corpus_id = std::string(value);
      } else if (key == "mono_policy") {
        try {
          m.mono_policy = parse_mono_policy(value);
        } catch (const InvalidArgument& e) {
          throw ParseError(e.what());
        }
      } else if (key == "split_ratio") {
        m.split_ratio = detail::parse_double(value, "split_ratio");
      } else if (key == "seed") {
        m.seed = detail::parse_int<std::uint64_t>(value, "seed");
      }
      continue;
    }
    if (!header_seen) {
      if (line != kManifestHeader) {
        throw ParseError("manifest: unexpected column header '" +
                         std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto cols = detail::split(line, ',');
    if (cols.size() != 9) {
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": expected 9 columns, found " +
                       std::to_string(cols.size()));
    }
    ManifestEntry e;
    e.path = std::string(cols[0]);
    e.label = parse_label(cols[1]);
    e.method = parse_forgery_method(cols[2]);
    if (!cols[3].empty()) {
      try {
        e.faked_side = parse_faked_side(cols[3]);
      } catch (const InvalidArgument& ex) {
        throw ParseError("manifest line " + std::to_string(line_no) + ": " +
                         ex.what());
      }
    }
    if (!cols[4].empty()) e.cutoff_hz = detail::parse_double(cols[4], "cutoff_hz");
    e.split = parse_split(cols[5]);
    e.source_clip_id = std::string(cols[6]);
    e.sample_rate_hz = detail::parse_int<int>(cols[7], "sample_rate_hz");
    e.duration_s = detail::parse_double(cols[8], "duration_s");
    m.entries.push_back(std::move(e));
  }
  if (!header_seen) throw ParseError("manifest: missing column header");
  m.validate_schema();
  return m;
}

void save_manifest(const CorpusManifest& manifest, const fs::path& path) {
  manifest.validate_schema();
  write_text(serialize_manifest(manifest), path);
}

CorpusManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  CorpusManifest m = parse_manifest(text, path.parent_path());
  m.validate_files();
  return m;
}

StereoClip derive_fake(const StereoClip& real, MonoPolicy policy,
                       const ManifestEntry& fake_entry) {
  const MonoClip mono = to_mono(real, policy);
  switch (fake_entry.method) {
    case ForgeryMethod::kHaas:
      if (!fake_entry.cutoff_hz || !fake_entry.faked_side) {
        throw InvalidArgument("haas entry lacks cut-off or faked side");
      }
      return fake_stereo_haas(
          mono, FilterSpec(*fake_entry.cutoff_hz, real.sample_rate_hz()),
          *fake_entry.faked_side);
    case ForgeryMethod::kCopy:
      return fake_stereo_copy(mono);
    case ForgeryMethod::kNone:
      break;
  }
  throw InvalidArgument("entry is not a fake: " + fake_entry.path);
}

CorpusManifest build_corpus(std::span<const fs::path> sources,
                            const CorpusOptions& options,
                            const fs::path& out_dir) {
  if (sources.empty()) throw InvalidArgument("build_corpus: no sources");
  if (!(options.split > 0.0 && options.split < 1.0)) {
    throw InvalidArgument("split ratio must lie in (0, 1)");
  }
  if (!(options.segment_s > 0.0)) {
    throw InvalidArgument("segment length must be positive");
  }
  validate_cutoffs(options.train_cutoffs, "train");
  validate_cutoffs(options.test_cutoffs, "test");
  if (options.corpus_id.find_first_of(",\n") != std::string::npos) {
    throw InvalidArgument("corpus id must not contain commas or newlines");
  }
  double max_cutoff = 0.0;
  for (double c : options.train_cutoffs) max_cutoff = std::max(max_cutoff, c);
  for (double c : options.test_cutoffs) max_cutoff = std::max(max_cutoff, c);

  std::vector<SourcePlan> plan;
  for (const auto& s : sources) plan.push_back({s, {}, Split::kTrain});
  std::sort(plan.begin(), plan.end(),
            [](const SourcePlan& a, const SourcePlan& b) { return a.path < b.path; });
  std::map<std::string, int> stem_uses;
  for (auto& p : plan) {
    std::string id = sanitize_id(p.path.stem().string());
    const int uses = stem_uses[id]++;
    if (uses > 0) id += "-" + std::to_string(uses);
    p.id = std::move(id);
  }

  // Whole sources go to one split.
  std::vector<std::size_t> order(plan.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(options.split * static_cast<double>(plan.size())));
  for (std::size_t k = 0; k < order.size(); ++k) {
    plan[order[k]].split = k < n_train ? Split::kTrain : Split::kTest;
  }

  fs::create_directories(out_dir / "real");
  fs::create_directories(out_dir / "fake");

  std::vector<std::vector<ManifestEntry>> per_source(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
  const auto n = static_cast<std::ptrdiff_t>(plan.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t si = 0; si < n; ++si) {
    const auto idx = static_cast<std::size_t>(si);
    try {
      const SourcePlan& src = plan[idx];
      const StereoClip clip = read_stereo_wav(src.path);
      const int rate = clip.sample_rate_hz();
      if (rate < 2.0 * max_cutoff) {
        throw InvalidArgument(src.path.string() + ": sample rate " +
                              std::to_string(rate) +
                              " Hz is below twice the highest cut-off");
      }
      const auto& cutoffs = src.split == Split::kTrain ? options.train_cutoffs
                                                       : options.test_cutoffs;
      const auto segments = segment_clip(clip, options.segment_s);
      auto& entries = per_source[idx];
      for (std::size_t k = 0; k < segments.size(); ++k) {
        const StereoClip& real = segments[k];
        const std::string clip_id = src.id + "_seg" + zero_pad(k, 4);

        ManifestEntry base;
        base.split = src.split;
        base.source_clip_id = clip_id;
        base.sample_rate_hz = rate;
        base.duration_s = real.duration_s();

        ManifestEntry real_entry = base;
        real_entry.path = "real/" + clip_id + ".wav";
        write_wav(real, out_dir / real_entry.path);
        entries.push_back(real_entry);

        const MonoClip mono = to_mono(real, options.mono_policy);
        for (double cutoff : cutoffs) {
          const FilterSpec spec(cutoff, rate);
          for (FakedSide side : {FakedSide::kRight, FakedSide::kLeft}) {
            ManifestEntry e = base;
            e.label = Label::kFake;
            e.method = ForgeryMethod::kHaas;
            e.faked_side = side;
            e.cutoff_hz = cutoff;
            e.path = "fake/" + clip_id + "_haas_" + std::string(to_string(side)) +
                     "_" + detail::format_short(cutoff) + ".wav";
            write_wav(fake_stereo_haas(mono, spec, side), out_dir / e.path);
            entries.push_back(std::move(e));
          }
        }
        if (options.include_copy) {
          ManifestEntry e = base;
          e.label = Label::kFake;
          e.method = ForgeryMethod::kCopy;
          e.faked_side = FakedSide::kRight;
          e.path = "fake/" + clip_id + "_copy.wav";
          write_wav(fake_stereo_copy(mono), out_dir / e.path);
          entries.push_back(std::move(e));
        }
      }
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CorpusManifest manifest;
  manifest.corpus_id = options.corpus_id;
  manifest.mono_policy = options.mono_policy;
  manifest.split_ratio = options.split;
  manifest.seed = options.seed;
  manifest.base_dir = out_dir;
  for (auto& entries : per_source) {
    for (auto& e : entries) manifest.entries.push_back(std::move(e));
  }
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

StereoClip synthesize_clip(std::mt19937_64& rng, std::size_t num_samples,
                           int sample_rate_hz) {
  if (num_samples == 0) throw InvalidArgument("synthesize_clip: zero length");
  std::vector<double> left = synth_channel(rng, num_samples, sample_rate_hz);
  std::vector<double> right = synth_channel(rng, num_samples, sample_rate_hz);
  return StereoClip(std::move(left), std::move(right), sample_rate_hz);
}

std::vector<fs::path> synthesize_sources(std::size_t n_clips, double duration_s,
                                         int sample_rate_hz, std::uint64_t seed,
                                         const fs::path& out_dir) {
  if (n_clips == 0) throw InvalidArgument("synthesize_sources: n_clips must be > 0");
  if (!(duration_s > 0.0)) throw InvalidArgument("duration must be positive");
  if (sample_rate_hz <= 0) throw InvalidArgument("sample rate must be positive");
  const auto num_samples =
      static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  if (num_samples == 0) throw InvalidArgument("duration shorter than one sample");

  fs::create_directories(out_dir);
  std::vector<fs::path> paths(n_clips);
  for (std::size_t i = 0; i < n_clips; ++i) {
    paths[i] = out_dir / ("synth_" + std::to_string(seed) + "_" +
                          zero_pad(i, 5) + ".wav");
  }
  std::vector<std::exception_ptr> errors(n_clips);
  const auto n = static_cast<std::ptrdiff_t>(n_clips);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      std::seed_seq seq{static_cast<std::uint32_t>(seed),
                        static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i),
                        static_cast<std::uint32_t>(i >> 32)};
      std::mt19937_64 rng(seq);
      write_wav(synthesize_clip(rng, num_samples, sample_rate_hz), paths[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return paths;
}

std::vector<std::size_t> select_entries(const CorpusManifest& manifest,
                                        Split split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split == split) out.push_back(i);
  }
  return out;
}

}  // namespace stereofake
