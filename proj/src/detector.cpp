#include "stereofake/detector.hpp"

#include <fstream>
#include <iterator>

#include "text_util.hpp"

namespace stereofake {
namespace {

Label to_label(int svm_label) {
  return svm_label == kFakeLabel ? Label::kFake : Label::kReal;
}

TrainingSet pair_set(std::span<const ClipFeature> real,
                     std::span<const ClipFeature> fake) {
  TrainingSet ts;
  for (const auto& f : real) ts.add(f.values, kRealLabel);
  for (const auto& f : fake) ts.add(f.values, kFakeLabel);
  return ts;
}

std::string_view line_value(std::string_view text, std::size_t& pos,
                            std::string_view key) {
  const std::size_t nl = text.find('\n', pos);
  if (pos >= text.size() || nl == std::string_view::npos) {
    throw ParseError("detector: unexpected end of input, expected '" +
                     std::string(key) + "'");
  }
  std::string_view line = text.substr(pos, nl - pos);
  pos = nl + 1;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const std::size_t sp = line.find(' ');
  if (line.substr(0, sp) != key) {
    throw ParseError("detector: expected '" + std::string(key) + "', found '" +
                     std::string(line) + "'");
  }
  return sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
}

}  // namespace

void DetectorModel::validate() const {
  svm_right_faked.validate();
  svm_left_faked.validate();
  if (svm_right_faked.dimension() != features.dimension() ||
      svm_left_faked.dimension() != features.dimension()) {
    throw InvalidArgument("detector: classifier dimension does not match the "
                          "feature settings");
  }
  if (svm_right_faked.faked_side != FakedSide::kRight ||
      svm_left_faked.faked_side != FakedSide::kLeft) {
    throw InvalidArgument("detector: classifier faked-side tags do not match "
                          "their slots");
  }
}

Label fuse(Label first, Label second) {
  return first == Label::kFake || second == Label::kFake ? Label::kFake
                                                         : Label::kReal;
}

DetectorModel train_detector(std::span<const ClipFeature> real,
                             std::span<const ClipFeature> fake_right_faked,
                             std::span<const ClipFeature> fake_left_faked,
                             double penalty, const FeatureSettings& settings,
                             std::string corpus_id) {
  if (real.empty() || fake_right_faked.empty() || fake_left_faked.empty()) {
    throw InvalidArgument(
        "train_detector: real, right-faked and left-faked sets must all be "
        "non-empty");
  }
  const TrainingSet first = pair_set(real, fake_right_faked);
  const TrainingSet second = pair_set(real, fake_left_faked);
  if (first.dimension() != settings.dimension() ||
      second.dimension() != settings.dimension()) {
    throw InvalidArgument("train_detector: feature dimension does not match "
                          "the feature settings");
  }

  DetectorModel model;
  model.features = settings;
  model.svm_right_faked = train(first, penalty);
  model.svm_right_faked.faked_side = FakedSide::kRight;
  model.svm_right_faked.corpus_id = corpus_id;
  model.svm_left_faked = train(second, penalty);
  model.svm_left_faked.faked_side = FakedSide::kLeft;
  model.svm_left_faked.corpus_id = std::move(corpus_id);
  return model;
}

Verdict classify(const DetectorModel& model, std::span<const double> feature) {
  const Decision first = decide(model.svm_right_faked, feature);
  const Decision second = decide(model.svm_left_faked, feature);
  Verdict v;
  v.path = DecisionPath::kSvm;
  v.score_1st = first.score;
  v.score_2nd = second.score;
  v.label_1st = to_label(first.label);
  v.label_2nd = to_label(second.label);
  v.label = fuse(*v.label_1st, *v.label_2nd);
  return v;
}

Verdict detect(const DetectorModel& model, const StereoClip& clip,
               FeatureExtractor& extractor) {
  return classify(model, extractor.extract(clip).values);
}

Verdict detect(const DetectorModel& model, const StereoClip& clip) {
  FeatureExtractor extractor(model.features);
  return detect(model, clip, extractor);
}

Verdict detect_with_copy_check(const DetectorModel& model,
                               const StereoClip& clip,
                               FeatureExtractor& extractor) {
  if (is_channel_copy(clip, 0.0)) {
    Verdict v;
    v.label = Label::kFake;
    v.path = DecisionPath::kChannelCopy;
    return v;
  }
  return detect(model, clip, extractor);
}

Verdict detect_with_copy_check(const DetectorModel& model,
                               const StereoClip& clip) {
  FeatureExtractor extractor(model.features);
  return detect_with_copy_check(model, clip, extractor);
}

std::string serialize_detector(const DetectorModel& model) {
  model.validate();
  const FeatureSettings& f = model.features;
  using detail::format_double;
  std::string out = "stereofake-detector\n";
  out += "schema_version " + std::to_string(kDetectorSchemaVersion) + "\n";
  out += "frame_s " + format_double(f.frame_s) + "\n";
  out += "hop_s " + format_double(f.hop_s) + "\n";
  out += "num_filters " + std::to_string(f.num_filters) + "\n";
  out += "min_hz " + format_double(f.min_hz) + "\n";
  out += "max_hz " + format_double(f.max_hz) + "\n";
  out += "num_coeffs " + std::to_string(f.num_coeffs) + "\n";
  out += "input_scale " + format_double(f.input_scale) + "\n";
  out += "classifier 1st\n";
  out += serialize_model(model.svm_right_faked);
  out += "classifier 2nd\n";
  out += serialize_model(model.svm_left_faked);
  out += "end\n";
  return out;
}

DetectorModel parse_detector(std::string_view text) {
  std::size_t pos = 0;
  const std::size_t nl = text.find('\n');
  if (nl == std::string_view::npos ||
      detail::trim(text.substr(0, nl)) != "stereofake-detector") {
    throw ParseError("detector: missing 'stereofake-detector' header");
  }
  pos = nl + 1;
  const int version = detail::parse_int<int>(
      line_value(text, pos, "schema_version"), "schema_version");
  if (version != kDetectorSchemaVersion) {
    throw ParseError("detector: schema version " + std::to_string(version) +
                     " is not supported");
  }
  DetectorModel m;
  FeatureSettings& f = m.features;
  f.frame_s = detail::parse_double(line_value(text, pos, "frame_s"), "frame_s");
  f.hop_s = detail::parse_double(line_value(text, pos, "hop_s"), "hop_s");
  f.num_filters = detail::parse_int<std::size_t>(
      line_value(text, pos, "num_filters"), "num_filters");
  f.min_hz = detail::parse_double(line_value(text, pos, "min_hz"), "min_hz");
  f.max_hz = detail::parse_double(line_value(text, pos, "max_hz"), "max_hz");
  f.num_coeffs = detail::parse_int<std::size_t>(
      line_value(text, pos, "num_coeffs"), "num_coeffs");
  f.input_scale =
      detail::parse_double(line_value(text, pos, "input_scale"), "input_scale");
  if (line_value(text, pos, "classifier") != "1st") {
    throw ParseError("detector: expected 'classifier 1st'");
  }
  m.svm_right_faked = parse_model(text, pos);
  if (line_value(text, pos, "classifier") != "2nd") {
    throw ParseError("detector: expected 'classifier 2nd'");
  }
  m.svm_left_faked = parse_model(text, pos);
  line_value(text, pos, "end");
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return m;
}

void save_detector(const DetectorModel& model,
                   const std::filesystem::path& path) {
  const std::string text = serialize_detector(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

DetectorModel load_detector(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_detector(text);
}

}  // namespace stereofake
