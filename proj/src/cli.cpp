#include "stereofake/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "stereofake/audio_io.hpp"
#include "stereofake/corpus.hpp"
#include "stereofake/detector.hpp"
#include "stereofake/eval.hpp"
#include "stereofake/features.hpp"
#include "stereofake/forgery.hpp"
#include "stereofake/svm.hpp"
#include "text_util.hpp"

namespace stereofake {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

struct ForgeArgs {
  std::string input;
  std::string output;
  double cutoff = 200.0;
  std::string side = "right";
  std::string method = "haas";
  std::string mono_policy = "left";
};

struct SynthArgs {
  std::size_t count = 400;
  double duration = 1.0;
  int rate = 44100;
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir;
};

struct CorpusArgs {
  std::vector<std::string> sources;
  std::string out_dir;
  std::string corpus_id = "corpus";
  std::vector<double> train_cutoffs{200.0};
  std::vector<double> test_cutoffs{200.0, 400.0, 600.0, 800.0, 1000.0};
  double split = 0.6;
  std::string mono_policy = "left";
  std::uint64_t seed = kDefaultSeed;
  double segment = 1.0;
  bool with_copy = false;
};

struct TrainArgs {
  std::string manifest;
  std::string out;
  double penalty = kDefaultPenalty;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t filters = 40;
  std::size_t coeffs = 40;
};

struct DetectArgs {
  std::string model;
  std::vector<std::string> clips;
  bool no_copy_check = false;
};

struct EvalArgs {
  std::vector<std::string> models;
  std::vector<std::string> manifests;
  std::string out = "report.csv";
  std::string text_out;
  std::vector<double> cutoffs;
  std::vector<std::string> scopes{"1st", "2nd", "fused"};
  bool copy_check = false;
};

struct StatsArgs {
  std::string manifest;
  std::string out = "feature_stats.csv";
  std::string split = "test";
  std::vector<double> cutoffs;
};

std::vector<fs::path> expand_sources(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& s : inputs) {
    const fs::path p(s);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".wav") {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw InvalidArgument("no source WAV files found");
  return out;
}

// Appends "--key=value" for config entries whose flag is absent from args.
std::vector<std::string> apply_config_overlay(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config file: " + config_path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument(config_path + ":" + std::to_string(line_no) +
                            ": expected key=value");
    }
    const std::string key(detail::trim(t.substr(0, eq)));
    const std::string value(detail::trim(t.substr(eq + 1)));
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const auto& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) extra.push_back(flag + "=" + value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void log_header(std::ostream& err, const std::string& sub,
                const std::uint64_t* seed) {
  err << "stereofake " << sub;
  if (seed != nullptr) err << " seed=" << *seed;
  err << " threads=" << omp_get_max_threads() << '\n';
}

int cmd_forge(const ForgeArgs& a, std::ostream& out, std::ostream& err) {
  log_header(err, "forge", nullptr);
  const Clip clip = read_wav(a.input);
  const MonoPolicy policy = parse_mono_policy(a.mono_policy);
  const MonoClip mono = std::holds_alternative<MonoClip>(clip)
                            ? std::get<MonoClip>(clip)
                            : to_mono(std::get<StereoClip>(clip), policy);
  if (!is_corpus_rate(mono.sample_rate_hz())) {
    err << "warning: unusual sample rate " << mono.sample_rate_hz() << " Hz\n";
  }
  if (a.method == "copy") {
    write_wav(fake_stereo_copy(mono), a.output);
    out << "method=copy rate=" << mono.sample_rate_hz() << " out=" << a.output
        << '\n';
    return kExitOk;
  }
  if (a.method != "haas") {
    throw InvalidArgument("--method must be haas or copy");
  }
  const FakedSide side = parse_faked_side(a.side);
  const FilterSpec spec(a.cutoff, mono.sample_rate_hz());
  write_wav(fake_stereo_haas(mono, spec, side), a.output);
  out << "method=haas cutoff_hz=" << detail::format_short(a.cutoff)
      << " side=" << to_string(side) << " rate=" << mono.sample_rate_hz()
      << " alpha=" << detail::format_double(spec.alpha()) << " out=" << a.output
      << '\n';
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  log_header(err, "synth", &a.seed);
  const auto paths =
      synthesize_sources(a.count, a.duration, a.rate, a.seed, a.out_dir);
  for (const auto& p : paths) out << p.string() << '\n';
  err << "wrote " << paths.size() << " clips to " << a.out_dir << '\n';
  return kExitOk;
}

int cmd_corpus(const CorpusArgs& a, std::ostream& out, std::ostream& err) {
  log_header(err, "corpus", &a.seed);
  CorpusOptions opt;
  opt.train_cutoffs = a.train_cutoffs;
  opt.test_cutoffs = a.test_cutoffs;
  opt.split = a.split;
  opt.mono_policy = parse_mono_policy(a.mono_policy);
  opt.seed = a.seed;
  opt.segment_s = a.segment;
  opt.include_copy = a.with_copy;
  opt.corpus_id = a.corpus_id;
  const auto sources = expand_sources(a.sources);
  const CorpusManifest m = build_corpus(sources, opt, a.out_dir);
  const fs::path manifest_path = fs::path(a.out_dir) / "manifest.csv";
  out << manifest_path.string() << '\n';
  err << "corpus '" << m.corpus_id << "': " << m.entries.size()
      << " entries from " << sources.size() << " sources\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  log_header(err, "train", nullptr);
  const CorpusManifest m = load_manifest(a.manifest);
  FeatureSettings settings;
  settings.frame_s = a.frame_ms / 1000.0;
  settings.hop_s = a.hop_ms / 1000.0;
  settings.num_filters = a.filters;
  settings.num_coeffs = a.coeffs;
  const SplitFeatures f = extract_split_features(m, Split::kTrain, settings);

  std::vector<ClipFeature> real, right_faked, left_faked;
  for (std::size_t i = 0; i < f.features.size(); ++i) {
    const ManifestEntry& e = m.entries[f.entry_index[i]];
    if (e.label == Label::kReal) {
      real.push_back(f.features[i]);
    } else if (e.method == ForgeryMethod::kHaas) {
      (e.faked_side == FakedSide::kRight ? right_faked : left_faked)
          .push_back(f.features[i]);
    }
  }
  err << "training on " << real.size() << " real, " << right_faked.size()
      << " right-faked, " << left_faked.size() << " left-faked clips\n";
  const DetectorModel model = train_detector(real, right_faked, left_faked,
                                             a.penalty, settings, m.corpus_id);
  save_detector(model, a.out);
  out << a.out << '\n';
  return kExitOk;
}

int cmd_detect(const DetectArgs& a, std::ostream& out, std::ostream& err) {
  log_header(err, "detect", nullptr);
  const DetectorModel model = load_detector(a.model);
  FeatureExtractor extractor(model.features);
  bool any_fake = false;
  for (const auto& path : a.clips) {
    const StereoClip clip = read_stereo_wav(path);
    if (!is_corpus_rate(clip.sample_rate_hz())) {
      err << "warning: " << path << ": unusual sample rate "
          << clip.sample_rate_hz() << " Hz\n";
    }
    const Verdict v = a.no_copy_check
                          ? detect(model, clip, extractor)
                          : detect_with_copy_check(model, clip, extractor);
    const auto score = [](const std::optional<double>& s) {
      return s ? detail::format_short(*s) : std::string("NA");
    };
    out << path << '\t' << to_string(v.label) << '\t' << score(v.score_1st)
        << '\t' << score(v.score_2nd) << '\n';
    any_fake = any_fake || v.label == Label::kFake;
  }
  return any_fake ? kExitFakeDetected : kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  log_header(err, "eval", nullptr);
  std::map<std::string, DetectorModel> models;
  for (const auto& p : a.models) {
    DetectorModel d = load_detector(p);
    std::string id = d.corpus_id().empty() ? fs::path(p).stem().string()
                                           : d.corpus_id();
    if (!models.emplace(id, std::move(d)).second) {
      throw InvalidArgument("two models share corpus id '" + id + "'");
    }
  }
  std::map<std::string, CorpusManifest> manifests;
  for (const auto& p : a.manifests) {
    CorpusManifest m = load_manifest(p);
    std::string id = m.corpus_id;
    if (!manifests.emplace(id, std::move(m)).second) {
      throw InvalidArgument("two manifests share corpus id '" + id + "'");
    }
  }
  EvalOptions opt;
  opt.cutoffs = a.cutoffs;
  opt.copy_check = a.copy_check;
  opt.scopes.clear();
  for (const auto& s : a.scopes) {
    try {
      opt.scopes.push_back(parse_scope(s));
    } catch (const ParseError& e) {
      throw InvalidArgument(e.what());
    }
  }
  const EvalReport report = cross_evaluate(models, manifests, opt);
  render_report(report, a.out, ReportFormat::kCsv);
  const std::string table = render_report(report, ReportFormat::kText);
  if (!a.text_out.empty()) {
    std::ofstream t(a.text_out, std::ios::binary | std::ios::trunc);
    if (!t) throw IoError("cannot open for writing: " + a.text_out);
    t << table;
  }
  out << table;
  return kExitOk;
}

int cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
  log_header(err, "stats", nullptr);
  const CorpusManifest m = load_manifest(a.manifest);
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const ManifestEntry& e = m.entries[i];
    if (a.split != "all" && to_string(e.split) != a.split) continue;
    if (!a.cutoffs.empty() && e.label == Label::kFake &&
        (!e.cutoff_hz || std::find(a.cutoffs.begin(), a.cutoffs.end(),
                                   *e.cutoff_hz) == a.cutoffs.end())) {
      continue;
    }
    picked.push_back(i);
  }
  if (picked.empty()) throw InvalidArgument("stats: no entries selected");
  const FeatureSettings settings;
  auto features = extract_features(
      picked.size(),
      [&](std::size_t i) { return read_stereo_wav(m.resolve(m.entries[picked[i]])); },
      settings);
  for (std::size_t i = 0; i < picked.size(); ++i) {
    features[i].label = m.entries[picked[i]].label;
  }
  dump_feature_stats(features, a.out);
  out << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Fake stereo audio forgery, feature extraction and detection"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "OpenMP worker threads (0 = runtime default)")
      ->capture_default_str();

  std::string config_path;
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "Flat key=value file; keys are flag names without '--'");
  };

  ForgeArgs forge;
  auto* forge_cmd = app.add_subcommand("forge", "Create a fake stereo WAV");
  forge_cmd->add_option("input", forge.input, "Mono (or stereo) input WAV")
      ->required();
  forge_cmd->add_option("output", forge.output, "Output stereo WAV")->required();
  forge_cmd->add_option("--cutoff", forge.cutoff, "High-pass cut-off in Hz")
      ->capture_default_str();
  forge_cmd->add_option("--side", forge.side, "Faked channel: left or right")
      ->capture_default_str();
  forge_cmd->add_option("--method", forge.method, "haas or copy")
      ->capture_default_str();
  forge_cmd->add_option("--mono-policy", forge.mono_policy,
                        "Stereo input downmix: left, right or average")
      ->capture_default_str();
  add_config(forge_cmd);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic stereo sources");
  synth_cmd->add_option("--n", synth.count, "Number of clips")->capture_default_str();
  synth_cmd->add_option("--duration", synth.duration, "Clip duration in seconds")
      ->capture_default_str();
  synth_cmd->add_option("--rate", synth.rate, "Sample rate in Hz")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  add_config(synth_cmd);

  CorpusArgs corpus;
  auto* corpus_cmd = app.add_subcommand("corpus", "Build a labelled corpus");
  corpus_cmd->add_option("--sources", corpus.sources,
                         "Stereo WAV files or directories of WAVs")
      ->required()
      ->delimiter(',');
  corpus_cmd->add_option("--out-dir", corpus.out_dir, "Output directory")
      ->required();
  corpus_cmd->add_option("--corpus-id", corpus.corpus_id, "Corpus identifier")
      ->capture_default_str();
  corpus_cmd->add_option("--train-cutoffs", corpus.train_cutoffs,
                         "Cut-offs (Hz) for train-split fakes")
      ->delimiter(',')
      ->capture_default_str();
  corpus_cmd->add_option("--test-cutoffs", corpus.test_cutoffs,
                         "Cut-offs (Hz) for test-split fakes")
      ->delimiter(',')
      ->capture_default_str();
  corpus_cmd->add_option("--split", corpus.split, "Train fraction of sources")
      ->capture_default_str();
  corpus_cmd->add_option("--mono-policy", corpus.mono_policy,
                         "Mono source: left, right or average")
      ->capture_default_str();
  corpus_cmd->add_option("--seed", corpus.seed, "Split shuffle seed")
      ->capture_default_str();
  corpus_cmd->add_option("--segment", corpus.segment, "Segment length in seconds")
      ->capture_default_str();
  corpus_cmd->add_flag("--with-copy", corpus.with_copy,
                       "Also emit channel-copy fakes")
      ->capture_default_str();
  add_config(corpus_cmd);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a dual-SVM detector");
  train_cmd->add_option("--manifest", train_args.manifest, "Corpus manifest CSV")
      ->required();
  train_cmd->add_option("--out", train_args.out, "Detector file to write")
      ->required();
  train_cmd->add_option("--C", train_args.penalty, "SVM penalty")
      ->capture_default_str();
  train_cmd->add_option("--frame-ms", train_args.frame_ms, "Frame length in ms")
      ->capture_default_str();
  train_cmd->add_option("--hop-ms", train_args.hop_ms, "Frame hop in ms")
      ->capture_default_str();
  train_cmd->add_option("--filters", train_args.filters, "Mel filters")
      ->capture_default_str();
  train_cmd->add_option("--coeffs", train_args.coeffs, "MFCCs per channel")
      ->capture_default_str();
  add_config(train_cmd);

  DetectArgs detect_args;
  auto* detect_cmd = app.add_subcommand("detect", "Classify stereo clips");
  detect_cmd->add_option("--model", detect_args.model, "Detector file")
      ->required();
  detect_cmd->add_option("clips", detect_args.clips, "Stereo WAV files")
      ->required();
  detect_cmd->add_flag("--no-copy-check", detect_args.no_copy_check,
                       "Skip the identical-channel fast path")
      ->capture_default_str();
  add_config(detect_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Intra- and cross-corpus evaluation");
  eval_cmd->add_option("--models", eval_args.models, "Detector files")
      ->required()
      ->delimiter(',');
  eval_cmd->add_option("--manifests", eval_args.manifests, "Manifest CSVs")
      ->required()
      ->delimiter(',');
  eval_cmd->add_option("--out", eval_args.out, "Report CSV")->capture_default_str();
  eval_cmd->add_option("--text", eval_args.text_out, "Also write the text table");
  eval_cmd->add_option("--cutoffs", eval_args.cutoffs,
                       "Only these cut-offs (default: all)")
      ->delimiter(',');
  eval_cmd->add_option("--scopes", eval_args.scopes, "1st, 2nd, fused")
      ->delimiter(',')
      ->capture_default_str();
  eval_cmd->add_flag("--copy-check", eval_args.copy_check,
                     "Apply the identical-channel fast path")
      ->capture_default_str();
  add_config(eval_cmd);

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Export per-component feature box-plot statistics");
  stats_cmd->add_option("--manifest", stats_args.manifest, "Corpus manifest CSV")
      ->required();
  stats_cmd->add_option("--out", stats_args.out, "Stats CSV")->capture_default_str();
  stats_cmd->add_option("--split", stats_args.split, "train, test or all")
      ->capture_default_str();
  stats_cmd->add_option("--cutoffs", stats_args.cutoffs,
                        "Only fakes at these cut-offs (default: all)")
      ->delimiter(',');
  add_config(stats_cmd);

  try {
    std::vector<std::string> args = apply_config_overlay(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidArgs;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidArgs;
  }

  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*forge_cmd) return cmd_forge(forge, out, err);
    if (*synth_cmd) return cmd_synth(synth, out, err);
    if (*corpus_cmd) return cmd_corpus(corpus, out, err);
    if (*train_cmd) return cmd_train(train_args, out, err);
    if (*detect_cmd) return cmd_detect(detect_args, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, out, err);
    if (*stats_cmd) return cmd_stats(stats_args, out, err);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidArgs;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitInvalidArgs;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace stereofake
