#include "stereofake/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "text_util.hpp"

namespace stereofake {
namespace {

// Channel-copy fakes sort after every numeric cut-off.
struct CutoffKey {
  std::optional<double> hz;
  bool operator<(const CutoffKey& o) const {
    if (hz && o.hz) return *hz < *o.hz;
    return hz.has_value() && !o.hz.has_value();
  }
  bool operator==(const CutoffKey& o) const { return hz == o.hz; }
};

Label predicted_for(const Verdict& v, Scope scope) {
  if (v.path == DecisionPath::kChannelCopy) return Label::kFake;
  switch (scope) {
    case Scope::kFirst: return *v.label_1st;
    case Scope::kSecond: return *v.label_2nd;
    case Scope::kFused: return v.label;
  }
  return v.label;
}

bool fake_in_scope(const ManifestEntry& e, Scope scope) {
  if (scope == Scope::kFused || e.method == ForgeryMethod::kCopy) return true;
  const FakedSide wanted =
      scope == Scope::kFirst ? FakedSide::kRight : FakedSide::kLeft;
  return e.faked_side == wanted;
}

std::string cutoff_text(const std::optional<double>& hz) {
  return hz ? detail::format_short(*hz) : std::string();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string render_csv(const EvalReport& report) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : report.rows) {
    out += r.train_corpus + ',' + r.test_corpus + ',' + cutoff_text(r.cutoff_hz) +
           ',' + std::string(to_string(r.scope)) + ',' + format_fixed(r.acc, 4) +
           ',' + format_fixed(r.far, 4) + ',' + std::to_string(r.n_real) + ',' +
           std::to_string(r.n_fake) + '\n';
  }
  return out;
}

template <typename T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

// Train rows x test columns, "ACC/FAR" in percent per cell.
std::string render_text(const EvalReport& report) {
  std::vector<std::pair<Scope, CutoffKey>> tables;
  std::vector<std::string> trains;
  std::vector<std::string> tests;
  for (const auto& r : report.rows) {
    push_unique(tables, std::pair{r.scope, CutoffKey{r.cutoff_hz}});
    push_unique(trains, r.train_corpus);
    push_unique(tests, r.test_corpus);
  }
  std::size_t width = 14;
  for (const auto& s : trains) width = std::max(width, s.size() + 2);
  for (const auto& s : tests) width = std::max(width, s.size() + 2);

  std::ostringstream out;
  out << "ACC(%)/FAR(%), rows = training corpus, columns = test corpus\n";
  for (const auto& [scope, cutoff] : tables) {
    out << "\n[" << to_string(scope) << " classifier, cut-off "
        << (cutoff.hz ? cutoff_text(cutoff.hz) + " Hz" : std::string("copy"))
        << "]\n";
    out << pad("", width);
    for (const auto& t : tests) out << pad(t, width);
    out << '\n';
    for (const auto& tr : trains) {
      out << pad(tr, width);
      for (const auto& te : tests) {
        std::string cell = "-";
        for (const auto& r : report.rows) {
          if (r.scope == scope && CutoffKey{r.cutoff_hz} == cutoff &&
              r.train_corpus == tr && r.test_corpus == te) {
            cell = format_fixed(100.0 * r.acc, 2) + "/" +
                   format_fixed(100.0 * r.far, 2);
          }
        }
        out << pad(cell, width);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::string_view to_string(Scope scope) {
  switch (scope) {
    case Scope::kFirst: return "1st";
    case Scope::kSecond: return "2nd";
    case Scope::kFused: return "fused";
  }
  return "fused";
}

Scope parse_scope(std::string_view text) {
  if (text == "1st") return Scope::kFirst;
  if (text == "2nd") return Scope::kSecond;
  if (text == "fused") return Scope::kFused;
  throw ParseError("scope must be 1st, 2nd or fused, got '" + std::string(text) +
                   "'");
}

void Confusion::add(Label truth, Label predicted) {
  if (truth == Label::kReal) {
    ++(predicted == Label::kReal ? real_as_real : real_as_fake);
  } else {
    ++(predicted == Label::kFake ? fake_as_fake : fake_as_real);
  }
}

double Confusion::acc() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(real_as_real + fake_as_fake) /
         static_cast<double>(total());
}

double Confusion::far() const {
  if (n_fake() == 0) return 0.0;
  return static_cast<double>(fake_as_real) / static_cast<double>(n_fake());
}

Confusion& Confusion::operator+=(const Confusion& o) {
  real_as_real += o.real_as_real;
  real_as_fake += o.real_as_fake;
  fake_as_fake += o.fake_as_fake;
  fake_as_real += o.fake_as_real;
  return *this;
}

SplitFeatures extract_split_features(const CorpusManifest& manifest,
                                     Split split,
                                     const FeatureSettings& settings,
                                     Execution exec) {
  SplitFeatures out;
  out.entry_index = select_entries(manifest, split);
  out.features = extract_features(
      out.entry_index.size(),
      [&](std::size_t i) {
        return read_stereo_wav(
            manifest.resolve(manifest.entries[out.entry_index[i]]));
      },
      settings, exec);
  for (std::size_t i = 0; i < out.features.size(); ++i) {
    const ManifestEntry& e = manifest.entries[out.entry_index[i]];
    out.features[i].label = e.label;
    out.features[i].provenance = e.path;
  }
  return out;
}

std::vector<Verdict> classify_all(const DetectorModel& model,
                                  const CorpusManifest& manifest,
                                  const SplitFeatures& features,
                                  bool copy_check) {
  std::vector<Verdict> verdicts(features.features.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (copy_check) {
      const ManifestEntry& e = manifest.entries[features.entry_index[i]];
      const StereoClip clip = read_stereo_wav(manifest.resolve(e));
      if (is_channel_copy(clip, 0.0)) {
        verdicts[i].label = Label::kFake;
        verdicts[i].path = DecisionPath::kChannelCopy;
        continue;
      }
    }
    verdicts[i] = classify(model, features.features[i].values);
  }
  return verdicts;
}

std::vector<EvalRow> score_verdicts(const CorpusManifest& manifest,
                                    const SplitFeatures& features,
                                    std::span<const Verdict> verdicts,
                                    const std::string& train_corpus,
                                    const EvalOptions& options) {
  if (verdicts.size() != features.entry_index.size()) {
    throw InvalidArgument("score_verdicts: verdict count mismatch");
  }
  std::set<CutoffKey> groups;
  for (std::size_t idx : features.entry_index) {
    const ManifestEntry& e = manifest.entries[idx];
    if (e.split != Split::kTest) {
      throw InvalidArgument("score_verdicts: train-split entry in test features");
    }
    if (e.label == Label::kFake) groups.insert(CutoffKey{e.cutoff_hz});
  }
  if (!options.cutoffs.empty()) {
    std::set<CutoffKey> kept;
    for (const auto& g : groups) {
      if (g.hz && std::find(options.cutoffs.begin(), options.cutoffs.end(),
                            *g.hz) != options.cutoffs.end()) {
        kept.insert(g);
      }
    }
    groups = std::move(kept);
  }
  if (groups.empty()) {
    throw InvalidArgument("evaluation: no test-split fakes match the filter "
                          "for corpus '" + manifest.corpus_id + "'");
  }

  std::vector<EvalRow> rows;
  for (const auto& group : groups) {
    for (Scope scope : options.scopes) {
      Confusion cm;
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const ManifestEntry& e = manifest.entries[features.entry_index[i]];
        if (e.label == Label::kFake &&
            (!(CutoffKey{e.cutoff_hz} == group) || !fake_in_scope(e, scope))) {
          continue;
        }
        cm.add(e.label, predicted_for(verdicts[i], scope));
      }
      if (cm.n_real() == 0) {
        throw InvalidArgument("evaluation: test split of corpus '" +
                              manifest.corpus_id + "' has no real clips");
      }
      EvalRow row;
      row.train_corpus = train_corpus;
      row.test_corpus = manifest.corpus_id;
      row.cutoff_hz = group.hz;
      row.scope = scope;
      row.acc = cm.acc();
      row.far = cm.far();
      row.n_real = cm.n_real();
      row.n_fake = cm.n_fake();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<EvalRow> evaluate(const DetectorModel& model,
                              const CorpusManifest& manifest,
                              const EvalOptions& options) {
  const SplitFeatures features = extract_split_features(
      manifest, Split::kTest, model.features, options.execution);
  const auto verdicts = classify_all(model, manifest, features,
                                     options.copy_check);
  return score_verdicts(manifest, features, verdicts, model.corpus_id(),
                        options);
}

std::vector<EvalRow> evaluate(const SvmModel& model,
                              const FeatureSettings& settings,
                              const CorpusManifest& manifest,
                              const EvalOptions& options) {
  if (!model.faked_side) {
    throw InvalidArgument("evaluate: classifier has no faked-side tag");
  }
  const SplitFeatures features = extract_split_features(
      manifest, Split::kTest, settings, options.execution);
  std::vector<Verdict> verdicts(features.features.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const Decision d = decide(model, features.features[i].values);
    const Label label = d.label == kFakeLabel ? Label::kFake : Label::kReal;
    verdicts[i].label = label;
    verdicts[i].label_1st = label;
    verdicts[i].label_2nd = label;
  }
  EvalOptions single = options;
  single.scopes = {*model.faked_side == FakedSide::kRight ? Scope::kFirst
                                                          : Scope::kSecond};
  return score_verdicts(manifest, features, verdicts, model.corpus_id, single);
}

EvalReport cross_evaluate(const std::map<std::string, DetectorModel>& models,
                          const std::map<std::string, CorpusManifest>& manifests,
                          const EvalOptions& options) {
  if (models.empty() || manifests.empty()) {
    throw InvalidArgument("cross_evaluate: need at least one model and corpus");
  }
  // Features depend only on (test corpus, feature settings): extract once.
  struct Cached {
    FeatureSettings settings;
    SplitFeatures features;
  };
  std::map<std::string, std::vector<Cached>> cache;
  const auto features_for = [&](const std::string& id, const CorpusManifest& m,
                                const FeatureSettings& s) -> const SplitFeatures& {
    auto& list = cache[id];
    for (const auto& c : list) {
      if (c.settings == s) return c.features;
    }
    list.push_back({s, extract_split_features(m, Split::kTest, s,
                                              options.execution)});
    return list.back().features;
  };

  EvalReport report;
  for (const auto& [train_id, model] : models) {
    for (const auto& [test_id, manifest] : manifests) {
      const SplitFeatures& f = features_for(test_id, manifest, model.features);
      const auto verdicts = classify_all(model, manifest, f, options.copy_check);
      auto rows = score_verdicts(manifest, f, verdicts, train_id, options);
      for (auto& r : rows) r.test_corpus = test_id;
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }
  }
  return report;
}

std::string format_fixed(double value, int decimals) {
  double scale = 1.0;
  for (int i = 0; i < decimals; ++i) scale *= 10.0;
  const bool negative = value < 0.0;
  const auto q = static_cast<long long>(std::floor(std::abs(value) * scale + 0.5));
  const auto iscale = static_cast<long long>(scale);
  std::string out = negative && q != 0 ? "-" : "";
  out += std::to_string(q / iscale);
  if (decimals > 0) {
    std::string frac = std::to_string(q % iscale);
    frac.insert(0, static_cast<std::size_t>(decimals) - frac.size(), '0');
    out += '.' + frac;
  }
  return out;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  return format == ReportFormat::kCsv ? render_csv(report) : render_text(report);
}

void render_report(const EvalReport& report, const std::filesystem::path& path,
                   ReportFormat format) {
  write_text(render_report(report, format), path);
}

EvalReport parse_report_csv(std::string_view text) {
  EvalReport report;
  bool header_seen = false;
  for (std::string_view line : detail::split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kReportHeader) throw ParseError("report: unexpected header");
      header_seen = true;
      continue;
    }
    const auto cols = detail::split(line, ',');
    if (cols.size() != 8) throw ParseError("report: expected 8 columns");
    EvalRow r;
    r.train_corpus = std::string(cols[0]);
    r.test_corpus = std::string(cols[1]);
    if (!cols[2].empty()) r.cutoff_hz = detail::parse_double(cols[2], "cutoff_hz");
    r.scope = parse_scope(cols[3]);
    r.acc = detail::parse_double(cols[4], "acc");
    r.far = detail::parse_double(cols[5], "far");
    r.n_real = detail::parse_int<std::size_t>(cols[6], "n_real");
    r.n_fake = detail::parse_int<std::size_t>(cols[7], "n_fake");
    report.rows.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("report: missing header");
  return report;
}

EvalReport load_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_report_csv(text);
}

}  // namespace stereofake
