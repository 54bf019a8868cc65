#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stereofake/corpus.hpp"
#include "stereofake/detector.hpp"

namespace stereofake {

// Which decision is scored: a single classifier against its own fake
// population, or the fused verdict against all fakes.
enum class Scope { kFirst, kSecond, kFused };

std::string_view to_string(Scope scope);
Scope parse_scope(std::string_view text);

struct Confusion {
  std::size_t real_as_real = 0;
  std::size_t real_as_fake = 0;
  std::size_t fake_as_fake = 0;
  std::size_t fake_as_real = 0;

  void add(Label truth, Label predicted);
  std::size_t n_real() const { return real_as_real + real_as_fake; }
  std::size_t n_fake() const { return fake_as_fake + fake_as_real; }
  std::size_t total() const { return n_real() + n_fake(); }
  // Fraction of all clips labelled correctly.
  double acc() const;
  // Fraction of fake clips accepted as real; 0 when there are no fakes.
  double far() const;

  Confusion& operator+=(const Confusion& other);
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct EvalRow {
  std::string train_corpus;
  std::string test_corpus;
  std::optional<double> cutoff_hz;  // absent for channel-copy fakes
  Scope scope = Scope::kFused;
  double acc = 0.0;
  double far = 0.0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

struct EvalOptions {
  std::vector<Scope> scopes{Scope::kFirst, Scope::kSecond, Scope::kFused};
  // Restrict to these cut-offs; empty keeps every cut-off in the test split.
  std::vector<double> cutoffs;
  bool copy_check = false;
  Execution execution = Execution::kParallel;
};

// Features of every test-split entry, in manifest order.
struct SplitFeatures {
  std::vector<std::size_t> entry_index;
  std::vector<ClipFeature> features;
};

SplitFeatures extract_split_features(const CorpusManifest& manifest,
                                     Split split,
                                     const FeatureSettings& settings,
                                     Execution exec = Execution::kParallel);

// Per-entry verdicts for precomputed test features.
std::vector<Verdict> classify_all(const DetectorModel& model,
                                  const CorpusManifest& manifest,
                                  const SplitFeatures& features,
                                  bool copy_check);

// Groups test entries by cut-off and tallies each requested scope. Throws
// InvalidArgument if the filtered test set is empty.
std::vector<EvalRow> score_verdicts(const CorpusManifest& manifest,
                                    const SplitFeatures& features,
                                    std::span<const Verdict> verdicts,
                                    const std::string& train_corpus,
                                    const EvalOptions& options = {});

std::vector<EvalRow> evaluate(const DetectorModel& model,
                              const CorpusManifest& manifest,
                              const EvalOptions& options = {});

// One classifier on its own: scope follows the model's faked side.
std::vector<EvalRow> evaluate(const SvmModel& model,
                              const FeatureSettings& settings,
                              const CorpusManifest& manifest,
                              const EvalOptions& options = {});

// Every model against every corpus's test split, ordered by train corpus,
// test corpus, cut-off, scope.
EvalReport cross_evaluate(const std::map<std::string, DetectorModel>& models,
                          const std::map<std::string, CorpusManifest>& manifests,
                          const EvalOptions& options = {});

enum class ReportFormat { kCsv, kText };

inline constexpr std::string_view kReportHeader =
    "train_corpus,test_corpus,cutoff_hz,scope,acc,far,n_real,n_fake";

// Fixed-point with round-half-up, e.g. format_fixed(0.994999, 4) == "0.9950".
std::string format_fixed(double value, int decimals);

std::string render_report(const EvalReport& report, ReportFormat format);
void render_report(const EvalReport& report, const std::filesystem::path& path,
                   ReportFormat format);
EvalReport parse_report_csv(std::string_view text);
EvalReport load_report_csv(const std::filesystem::path& path);

}  // namespace stereofake
