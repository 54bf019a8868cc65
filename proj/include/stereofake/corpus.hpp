#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stereofake/audio_io.hpp"
#include "stereofake/features.hpp"
#include "stereofake/forgery.hpp"

namespace stereofake {

enum class Split { kTrain, kTest };
enum class ForgeryMethod { kNone, kHaas, kCopy };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);
std::string_view to_string(ForgeryMethod method);
ForgeryMethod parse_forgery_method(std::string_view text);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  Label label = Label::kReal;
  ForgeryMethod method = ForgeryMethod::kNone;
  std::optional<FakedSide> faked_side;
  std::optional<double> cutoff_hz;
  Split split = Split::kTrain;
  std::string source_clip_id;
  int sample_rate_hz = 0;
  double duration_s = 0.0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct CorpusManifest {
  std::string corpus_id;
  MonoPolicy mono_policy = MonoPolicy::kLeft;
  double split_ratio = 0.6;
  std::uint64_t seed = 42;
  std::vector<ManifestEntry> entries;
  // Directory the entry paths are relative to. Not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& entry) const {
    return base_dir / entry.path;
  }
  // Throws ParseError on label/side/cutoff/method inconsistencies.
  void validate_schema() const;
  // Throws ParseError naming every entry whose file does not exist.
  void validate_files() const;
};

inline constexpr std::string_view kManifestHeader =
    "path,label,method,faked_side,cutoff_hz,split,source_clip_id,"
    "sample_rate_hz,duration_s";

// Metadata travels as leading "# key=value" lines before the column header.
std::string serialize_manifest(const CorpusManifest& manifest);
CorpusManifest parse_manifest(std::string_view text,
                              const std::filesystem::path& base_dir);
void save_manifest(const CorpusManifest& manifest,
                   const std::filesystem::path& path);
// Parses and checks that every referenced file exists.
CorpusManifest load_manifest(const std::filesystem::path& path);

struct CorpusOptions {
  std::vector<double> train_cutoffs{200.0};
  std::vector<double> test_cutoffs{200.0, 400.0, 600.0, 800.0, 1000.0};
  double split = 0.6;
  MonoPolicy mono_policy = MonoPolicy::kLeft;
  std::uint64_t seed = 42;
  double segment_s = 1.0;
  bool include_copy = false;
  std::string corpus_id = "corpus";
};

// Segments every source, keeps the real segments, and writes one Haas fake
// per (cut-off, faked side) for the split's cut-off list. Sources are split
// into train/test as whole files by a seeded shuffle: floor(split * n) go to
// train. Writes WAVs under out_dir/{real,fake}/ and out_dir/manifest.csv.
CorpusManifest build_corpus(std::span<const std::filesystem::path> sources,
                            const CorpusOptions& options,
                            const std::filesystem::path& out_dir);

// Regenerates a fake from its real source segment with the entry's recorded
// parameters.
StereoClip derive_fake(const StereoClip& real, MonoPolicy policy,
                       const ManifestEntry& fake_entry);

// One synthetic stereo clip: each channel independently mixes low-passed
// Gaussian noise with 2-5 random sinusoids, peak-normalized to 0.9.
StereoClip synthesize_clip(std::mt19937_64& rng, std::size_t num_samples,
                           int sample_rate_hz);

// Writes n_clips synthetic sources as out_dir/synth_<seed>_<index>.wav. Clip i
// depends only on (seed, i).
std::vector<std::filesystem::path> synthesize_sources(
    std::size_t n_clips, double duration_s, int sample_rate_hz,
    std::uint64_t seed, const std::filesystem::path& out_dir);

// Indices of entries in the given split, in manifest order.
std::vector<std::size_t> select_entries(const CorpusManifest& manifest,
                                        Split split);

}  // namespace stereofake
