#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stereofake/audio_io.hpp"
#include "stereofake/features.hpp"
#include "stereofake/svm.hpp"

namespace stereofake {

// Paired classifiers: the 1st separates real from right-faked stereo, the 2nd
// real from left-faked stereo. A clip is fake if either says fake.
struct DetectorModel {
  SvmModel svm_right_faked;
  SvmModel svm_left_faked;
  FeatureSettings features;

  const std::string& corpus_id() const { return svm_right_faked.corpus_id; }
  double penalty() const { return svm_right_faked.penalty; }
  void validate() const;
};

Label fuse(Label first, Label second);

enum class DecisionPath { kSvm, kChannelCopy };

struct Verdict {
  Label label = Label::kReal;
  DecisionPath path = DecisionPath::kSvm;
  // Absent when the channel-copy check decided without the classifiers.
  std::optional<double> score_1st;
  std::optional<double> score_2nd;
  std::optional<Label> label_1st;
  std::optional<Label> label_2nd;
};

DetectorModel train_detector(std::span<const ClipFeature> real,
                             std::span<const ClipFeature> fake_right_faked,
                             std::span<const ClipFeature> fake_left_faked,
                             double penalty = kDefaultPenalty,
                             const FeatureSettings& settings = {},
                             std::string corpus_id = {});

// Classifies a precomputed feature vector.
Verdict classify(const DetectorModel& model, std::span<const double> feature);

Verdict detect(const DetectorModel& model, const StereoClip& clip);
Verdict detect(const DetectorModel& model, const StereoClip& clip,
               FeatureExtractor& extractor);

// Identical channels are a sufficient sign of a channel-copy fake; such clips
// are flagged without running the classifiers.
Verdict detect_with_copy_check(const DetectorModel& model,
                               const StereoClip& clip);
Verdict detect_with_copy_check(const DetectorModel& model,
                               const StereoClip& clip,
                               FeatureExtractor& extractor);

inline constexpr int kDetectorSchemaVersion = 1;

std::string serialize_detector(const DetectorModel& model);
DetectorModel parse_detector(std::string_view text);
void save_detector(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_detector(const std::filesystem::path& path);

}  // namespace stereofake
