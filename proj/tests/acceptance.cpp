// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "power_spectrum.hpp"
#include "stereofake/corpus.hpp"
#include "stereofake/detector.hpp"
#include "stereofake/eval.hpp"
#include "stereofake/forgery.hpp"

using namespace stereofake;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o, double seconds) {
  std::printf("%s criterion %d: %s | %s | %.2f s\n", o.pass ? "PASS" : "FAIL", id,
              title.c_str(), o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(int id, const std::string& title, const std::function<Outcome()>& body,
         double limit_s = 0.0) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (limit_s > 0.0 && s > limit_s) {
    o.pass = false;
    o.detail += " (over the " + format_fixed(limit_s, 0) + " s budget)";
  }
  report(id, title, o, s);
}

std::string fmt(double v, int d = 4) { return format_fixed(v, d); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- criterion 1 -----------------------------------------------------------

Outcome filter_response() {
  const int rate = 44100;
  const std::size_t n = 8192;
  const FilterSpec spec(200.0, rate);
  std::vector<double> impulse(n, 0.0), h(n);
  impulse[0] = 1.0;
  high_pass_filter(impulse, spec.alpha(), h);

  detail::PowerSpectrum fft(n);
  std::copy(h.begin(), h.end(), fft.input().begin());
  std::vector<double> power(fft.num_bins());
  fft.compute(power);

  const double dc = std::sqrt(power[0]);
  const double bin_hz = static_cast<double>(rate) / n;
  const auto k = static_cast<std::size_t>(std::lround(200.0 / bin_hz));
  const double at_bin = std::sqrt(power[k]);
  const double at_cutoff = std::abs(oracle::dtft(h, 200.0, rate));
  bool monotone = true;
  for (std::size_t j = 1; j <= n / 4; ++j) monotone &= power[j] >= power[j - 1];

  Outcome o;
  o.pass = dc < 1e-3 && at_cutoff >= 0.65 && at_cutoff <= 0.76 && at_bin >= 0.65 &&
           at_bin <= 0.76 && monotone;
  o.detail = "|H(0)|=" + std::to_string(dc) + " |H(200 Hz)|=" + fmt(at_cutoff) +
             " |H(bin " + std::to_string(k) + ")|=" + fmt(at_bin) +
             " monotone=" + (monotone ? "yes" : "no");
  return o;
}

// ---- criterion 2 -----------------------------------------------------------

Outcome mfcc_oracle() {
  const MelConfig mel;  // B = L = 40
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> mag(-3.0, 10.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> E(mel.num_filters);
    for (auto& e : E) e = std::pow(10.0, mag(rng));
    const auto got = mfcc_frame(E, mel);
    const auto ref = oracle::mfcc_double_sum(E, mel.num_coeffs);
    for (std::size_t l = 0; l < got.size(); ++l) {
      worst = std::max(worst, std::abs(got[l] - ref[l]) / std::max(1.0, std::abs(ref[l])));
    }
  }
  double flat = 0.0;
  for (double c : {0.0, 1.0, 1e3, 1e12}) {
    const auto C = mfcc_frame(std::vector<double>(mel.num_filters, c), mel);
    for (std::size_t l = 1; l < C.size(); ++l) flat = std::max(flat, std::abs(C[l]));
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max rel err %.3g, max |C(l>=1)| on constant input %.3g",
                worst, flat);
  return {worst <= 1e-9 && flat < 1e-9, buf};
}

// ---- criterion 3 -----------------------------------------------------------

Outcome svm_blobs() {
  TrainingSet ts;
  oracle::separable_blobs(200, 1.0, 42, ts.features, ts.labels);
  const double C = 0.4;
  const auto r = train_svm(ts, C);
  std::size_t correct = 0;
  double sum_ay = 0.0, kkt = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto d = decide(r.model, ts.features[i]);
    correct += d.label == ts.labels[i];
    sum_ay += r.alphas[i] * ts.labels[i];
    const double m = ts.labels[i] * d.score;
    const double a = r.alphas[i];
    double resid = 0.0;
    if (a <= 0.0) {
      resid = std::max(0.0, 1.0 - m);
    } else if (a >= C) {
      resid = std::max(0.0, m - 1.0);
    } else {
      resid = std::abs(m - 1.0);
    }
    if (a < 0.0 || a > C) resid = std::numeric_limits<double>::infinity();
    kkt = std::max(kkt, resid);
  }
  const double acc = static_cast<double>(correct) / ts.size();
  char buf[160];
  std::snprintf(buf, sizeof buf, "train acc %.4f, |sum a*y| %.3g, max KKT residual %.3g, %zu iterations",
                acc, std::abs(sum_ay), kkt, r.iterations);
  return {correct == ts.size() && std::abs(sum_ay) <= 1e-6 && kkt <= 1e-3, buf};
}

// ---- criterion 4 -----------------------------------------------------------

Outcome fusion_table() {
  // Two one-feature classifiers: the 1st reads component 0, the 2nd component 1.
  FeatureSettings settings;
  settings.num_filters = 1;
  settings.num_coeffs = 1;
  const auto axis = [](std::size_t j, FakedSide side) {
    SvmModel m;
    m.weights = {0.0, 0.0};
    m.weights[j] = 1.0;
    m.scaler_mean = {0.0, 0.0};
    m.scaler_std = {1.0, 1.0};
    m.faked_side = side;
    return m;
  };
  DetectorModel model{axis(0, FakedSide::kRight), axis(1, FakedSide::kLeft), settings};
  model.validate();

  const Label R = Label::kReal, F = Label::kFake;
  struct Row { Label first, second, expected; };
  const Row table[] = {{R, R, R}, {F, R, F}, {R, F, F}, {F, F, F}};
  std::string detail;
  bool ok = true;
  for (const auto& row : table) {
    const std::vector<double> x{row.first == R ? 1.0 : -1.0, row.second == R ? 1.0 : -1.0};
    const Verdict v = classify(model, x);
    const bool row_ok = v.label_1st == row.first && v.label_2nd == row.second &&
                        v.label == row.expected && fuse(row.first, row.second) == row.expected;
    ok &= row_ok;
    detail += "(" + std::string(to_string(row.first)) + "," + std::string(to_string(row.second)) +
              ")->" + std::string(to_string(v.label)) + (row_ok ? " " : "! ");
  }
  return {ok, detail};
}

// ---- criteria 5-9 ----------------------------------------------------------

struct Experiment {
  fs::path manifest_200, manifest_1000;
  fs::path model_200, model_1000;
  fs::path report_200, report_1000;
  std::vector<EvalRow> rows_200, rows_1000;
  DetectorModel detector_200;
  CorpusManifest corpus_200;
};

std::vector<ClipFeature> pick(const CorpusManifest& m, const SplitFeatures& f,
                              Label label, std::optional<FakedSide> side) {
  std::vector<ClipFeature> out;
  for (std::size_t i = 0; i < f.entry_index.size(); ++i) {
    const auto& e = m.entries[f.entry_index[i]];
    if (e.label != label || (side && e.faked_side != side)) continue;
    out.push_back(f.features[i]);
  }
  return out;
}

DetectorModel train_from(const CorpusManifest& m) {
  const FeatureSettings settings;
  const auto f = extract_split_features(m, Split::kTrain, settings);
  return train_detector(pick(m, f, Label::kReal, std::nullopt),
                        pick(m, f, Label::kFake, FakedSide::kRight),
                        pick(m, f, Label::kFake, FakedSide::kLeft), kDefaultPenalty,
                        settings, m.corpus_id);
}

Experiment run_experiment(const fs::path& root, double* seconds_5, double* seconds_7) {
  Experiment x;
  auto t0 = Clock::now();
  const auto sources = synthesize_sources(400, 1.0, 44100, 42, root / "sources");

  CorpusOptions opt;
  opt.seed = 42;
  opt.split = 0.6;
  opt.train_cutoffs = {200.0};
  opt.corpus_id = "synth200";
  x.corpus_200 = build_corpus(sources, opt, root / "corpus200");
  x.manifest_200 = root / "corpus200" / "manifest.csv";
  x.detector_200 = train_from(x.corpus_200);
  x.model_200 = root / "synth200.det";
  save_detector(x.detector_200, x.model_200);
  x.rows_200 = evaluate(x.detector_200, x.corpus_200);
  x.report_200 = root / "report200.csv";
  render_report(EvalReport{x.rows_200}, x.report_200, ReportFormat::kCsv);
  if (seconds_5) *seconds_5 = std::chrono::duration<double>(Clock::now() - t0).count();

  t0 = Clock::now();
  opt.train_cutoffs = {1000.0};
  opt.corpus_id = "synth1000";
  const auto corpus_1000 = build_corpus(sources, opt, root / "corpus1000");
  x.manifest_1000 = root / "corpus1000" / "manifest.csv";
  const auto detector_1000 = train_from(corpus_1000);
  x.model_1000 = root / "synth1000.det";
  save_detector(detector_1000, x.model_1000);
  x.rows_1000 = evaluate(detector_1000, corpus_1000);
  x.report_1000 = root / "report1000.csv";
  render_report(EvalReport{x.rows_1000}, x.report_1000, ReportFormat::kCsv);
  if (seconds_7) *seconds_7 = std::chrono::duration<double>(Clock::now() - t0).count();
  return x;
}

const EvalRow& fused_at(const std::vector<EvalRow>& rows, double cutoff) {
  for (const auto& r : rows) {
    if (r.scope == Scope::kFused && r.cutoff_hz == cutoff) return r;
  }
  throw std::runtime_error("no fused row at " + fmt(cutoff, 0) + " Hz");
}

}  // namespace

int main() {
  std::printf("acceptance: %d OpenMP thread(s)\n", omp_get_max_threads());
  oracle::TempDir tmp("acceptance");

  run(1, "filter impulse response", filter_response, 1.0);
  run(2, "MFCC vs double-sum oracle", mfcc_oracle, 1.0);
  run(3, "SVM on separable blobs", svm_blobs, 5.0);
  run(4, "fusion truth table", fusion_table);

  std::optional<Experiment> first;
  double t5 = 0.0, t7 = 0.0;
  std::string setup_error;
  try {
    first = run_experiment(tmp.path() / "run1", &t5, &t7);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  const auto need = [&]() -> const Experiment& {
    if (!first) throw std::runtime_error("pipeline failed: " + setup_error);
    return *first;
  };

  run(5, "intra-corpus fused ACC/FAR at 200 Hz", [&] {
    const auto& r = fused_at(need().rows_200, 200.0);
    return Outcome{r.acc >= 0.95 && r.far <= 0.05 && t5 < 300.0,
                   "ACC " + fmt(r.acc) + ", FAR " + fmt(r.far) + ", n_real " +
                       std::to_string(r.n_real) + ", n_fake " + std::to_string(r.n_fake) +
                       ", pipeline " + fmt(t5, 1) + " s"};
  });

  run(6, "cut-off robustness 400-1000 Hz", [&] {
    Outcome o{true, ""};
    for (double c : {400.0, 600.0, 800.0, 1000.0}) {
      const auto& r = fused_at(need().rows_200, c);
      o.pass &= r.acc >= 0.90;
      o.detail += fmt(c, 0) + " Hz ACC " + fmt(r.acc) + "; ";
    }
    return o;
  });

  run(7, "train at 1000 Hz, ACC@1000 > ACC@200", [&] {
    const double hi = fused_at(need().rows_1000, 1000.0).acc;
    const double lo = fused_at(need().rows_1000, 200.0).acc;
    return Outcome{hi > lo && t7 < 300.0, "ACC@1000 " + fmt(hi) + ", ACC@200 " + fmt(lo) +
                                              ", pipeline " + fmt(t7, 1) + " s"};
  });

  run(8, "channel-copy fakes flagged without SVM", [&] {
    const auto& x = need();
    std::size_t total = 0, flagged = 0, svm_runs = 0;
    FeatureExtractor ex(x.detector_200.features);
    for (const auto& e : x.corpus_200.entries) {
      if (e.split != Split::kTest || e.label != Label::kReal) continue;
      const auto real = read_stereo_wav(x.corpus_200.resolve(e));
      // Through the PCM file format, as a forger would deliver it.
      const auto bytes = encode_wav(fake_stereo_copy(to_mono(real, MonoPolicy::kAverage)));
      const auto copy = std::get<StereoClip>(decode_wav(bytes));
      const Verdict v = detect_with_copy_check(x.detector_200, copy, ex);
      ++total;
      flagged += v.label == Label::kFake;
      svm_runs += v.path != DecisionPath::kChannelCopy || v.score_1st || v.score_2nd;
    }
    return Outcome{total > 0 && flagged == total && svm_runs == 0,
                   std::to_string(flagged) + "/" + std::to_string(total) +
                       " flagged, " + std::to_string(svm_runs) + " SVM invocations"};
  });

  run(9, "byte-identical rerun", [&] {
    const auto& a = need();
    const auto b = run_experiment(tmp.path() / "run2", nullptr, nullptr);
    const std::pair<fs::path, fs::path> pairs[] = {
        {a.manifest_200, b.manifest_200}, {a.manifest_1000, b.manifest_1000},
        {a.model_200, b.model_200},       {a.model_1000, b.model_1000},
        {a.report_200, b.report_200},     {a.report_1000, b.report_1000}};
    Outcome o{true, ""};
    for (const auto& [p, q] : pairs) {
      const bool same = slurp(p) == slurp(q) && !slurp(p).empty();
      o.pass &= same;
      o.detail += (p.parent_path().filename() / p.filename()).string() + (same ? " same; " : " DIFFERS; ");
    }
    return o;
  });

  std::printf("acceptance: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
