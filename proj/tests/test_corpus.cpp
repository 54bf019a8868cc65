#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "oracles.hpp"
#include "stereofake/corpus.hpp"

using namespace stereofake;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& p) {
  const auto b = slurp(p);
  return {b.begin(), b.end()};
}

std::string group_of(const ManifestEntry& e) {
  return e.source_clip_id.substr(0, e.source_clip_id.rfind("_seg"));
}

}  // namespace

TEST(Synth, DeterministicAndIndependentChannels) {
  oracle::TempDir dir("synth");
  const auto a = synthesize_sources(4, 0.25, 44100, 7, dir.path() / "a");
  const auto b = synthesize_sources(4, 0.25, 44100, 7, dir.path() / "b");
  const auto c = synthesize_sources(4, 0.25, 44100, 8, dir.path() / "c");
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].filename(), "synth_7_00000.wav");
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(slurp(a[i]), slurp(b[i]));
    EXPECT_NE(slurp(a[i]), slurp(c[i]));
    const auto clip = read_stereo_wav(a[i]);
    EXPECT_EQ(clip.size(), 11025u);
    EXPECT_FALSE(is_channel_copy(clip));
    double peak = 0.0;
    for (double v : clip.left()) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 0.9, 1e-4);
  }
  EXPECT_THROW(synthesize_sources(0, 1.0, 44100, 1, dir.path() / "d"), InvalidArgument);
}

TEST(Synth, ClipDependsOnlyOnSeedAndIndex) {
  oracle::TempDir dir("synth");
  const auto few = synthesize_sources(2, 0.1, 48000, 3, dir.path() / "few");
  const auto many = synthesize_sources(5, 0.1, 48000, 3, dir.path() / "many");
  EXPECT_EQ(slurp(few[1]), slurp(many[1]));
}

TEST(Corpus, CountsForOneTenSecondSource) {
  oracle::TempDir dir("corpus");
  std::mt19937_64 rng(1);
  write_wav(synthesize_clip(rng, 441000, 44100), dir.path() / "src.wav");
  CorpusOptions opt;
  opt.split = 0.5;  // floor(0.5 * 1) = 0 train sources
  opt.test_cutoffs = {200.0};
  const std::vector<fs::path> sources{dir.path() / "src.wav"};
  const auto m = build_corpus(sources, opt, dir.path() / "out");
  std::size_t reals = 0, fakes = 0;
  for (const auto& e : m.entries) {
    (e.label == Label::kReal ? reals : fakes) += 1;
    EXPECT_EQ(e.split, Split::kTest);
  }
  EXPECT_EQ(reals, 10u);
  EXPECT_EQ(fakes, 20u);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "manifest.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "real" / "src_seg0000.wav"));
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "fake" / "src_seg0009_haas_left_200.wav"));
}

class BuiltCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("built");
    sources_ = synthesize_sources(10, 2.0, 44100, 42, dir_->path() / "src");
    CorpusOptions opt;
    opt.include_copy = true;
    opt.corpus_id = "unit";
    manifest_ = new CorpusManifest(build_corpus(sources_, opt, dir_->path() / "out"));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static oracle::TempDir* dir_;
  static std::vector<fs::path> sources_;
  static CorpusManifest* manifest_;
};

oracle::TempDir* BuiltCorpus::dir_ = nullptr;
std::vector<fs::path> BuiltCorpus::sources_;
CorpusManifest* BuiltCorpus::manifest_ = nullptr;

TEST_F(BuiltCorpus, SplitsWholeSourcesSixToFour) {
  std::map<std::string, std::set<Split>> splits_of_group;
  std::map<std::string, std::set<Split>> splits_of_clip;
  for (const auto& e : manifest_->entries) {
    splits_of_group[group_of(e)].insert(e.split);
    splits_of_clip[e.source_clip_id].insert(e.split);
  }
  ASSERT_EQ(splits_of_group.size(), 10u);
  std::size_t train = 0;
  for (const auto& [g, s] : splits_of_group) {
    EXPECT_EQ(s.size(), 1u) << g;
    train += s.count(Split::kTrain);
  }
  EXPECT_EQ(train, 6u);
  for (const auto& [c, s] : splits_of_clip) EXPECT_EQ(s.size(), 1u) << c;
}

TEST_F(BuiltCorpus, CountingPerSplit) {
  // Per real clip: train has 1 cut-off, test 5, both sides, plus one copy.
  std::map<Split, std::size_t> reals, entries;
  for (const auto& e : manifest_->entries) {
    entries[e.split] += 1;
    if (e.label == Label::kReal) reals[e.split] += 1;
  }
  EXPECT_EQ(reals[Split::kTrain], 12u);
  EXPECT_EQ(reals[Split::kTest], 8u);
  EXPECT_EQ(entries[Split::kTrain], reals[Split::kTrain] * (1 + 1 * 2 + 1));
  EXPECT_EQ(entries[Split::kTest], reals[Split::kTest] * (1 + 5 * 2 + 1));
  for (const auto& e : manifest_->entries) {
    if (e.method != ForgeryMethod::kHaas) continue;
    if (e.split == Split::kTrain) EXPECT_EQ(*e.cutoff_hz, 200.0);
  }
}

TEST_F(BuiltCorpus, FakesReDeriveBitExactly) {
  std::map<std::string, const ManifestEntry*> real_of;
  for (const auto& e : manifest_->entries) {
    if (e.label == Label::kReal) real_of[e.source_clip_id] = &e;
  }
  std::size_t checked = 0;
  for (std::size_t i = 0; i < manifest_->entries.size(); i += 3) {
    const auto& e = manifest_->entries[i];
    if (e.label != Label::kFake) continue;
    const auto real = read_stereo_wav(manifest_->resolve(*real_of.at(e.source_clip_id)));
    const auto derived = derive_fake(real, manifest_->mono_policy, e);
    const auto stored = read_stereo_wav(manifest_->resolve(e));
    EXPECT_EQ(encode_wav(derived), encode_wav(stored)) << e.path;
    if (e.method == ForgeryMethod::kCopy) EXPECT_TRUE(is_channel_copy(stored));
    ++checked;
  }
  EXPECT_GT(checked, 20u);
  EXPECT_THROW(derive_fake(read_stereo_wav(manifest_->resolve(manifest_->entries[0])),
                           MonoPolicy::kLeft, manifest_->entries[0]),
               InvalidArgument);
}

TEST_F(BuiltCorpus, ManifestRoundTrip) {
  const fs::path path = dir_->path() / "out" / "manifest.csv";
  const auto loaded = load_manifest(path);
  EXPECT_EQ(loaded.entries, manifest_->entries);
  EXPECT_EQ(loaded.corpus_id, "unit");
  EXPECT_EQ(loaded.seed, 42u);
  EXPECT_EQ(loaded.split_ratio, 0.6);
  EXPECT_EQ(loaded.mono_policy, MonoPolicy::kLeft);
  EXPECT_EQ(serialize_manifest(loaded), read_text(path));

  const auto text = read_text(path);
  EXPECT_NE(text.find(std::string(kManifestHeader) + "\n"), std::string::npos);
  EXPECT_EQ(text.rfind("# corpus_id=unit\n", 0), 0u);
}

TEST_F(BuiltCorpus, SelectEntries) {
  const auto test = select_entries(*manifest_, Split::kTest);
  const auto train = select_entries(*manifest_, Split::kTrain);
  EXPECT_EQ(test.size() + train.size(), manifest_->entries.size());
  EXPECT_TRUE(std::is_sorted(test.begin(), test.end()));
  for (auto i : test) EXPECT_EQ(manifest_->entries[i].split, Split::kTest);
}

TEST_F(BuiltCorpus, ParallelBuildMatchesSerialBytes) {
  CorpusOptions opt;
  opt.include_copy = true;
  opt.corpus_id = "unit";
  const auto again = build_corpus(sources_, opt, dir_->path() / "again");
  EXPECT_EQ(serialize_manifest(again), serialize_manifest(*manifest_));
  for (std::size_t i = 0; i < again.entries.size(); i += 11) {
    EXPECT_EQ(slurp(again.resolve(again.entries[i])),
              slurp(manifest_->resolve(manifest_->entries[i])));
  }
}

TEST(Manifest, MissingFileNamesEveryOffender) {
  oracle::TempDir dir("manifest");
  const auto sources = synthesize_sources(2, 1.0, 44100, 1, dir.path() / "src");
  CorpusOptions opt;
  opt.test_cutoffs = {200.0};
  const auto m = build_corpus(sources, opt, dir.path() / "out");
  fs::remove(m.resolve(m.entries[0]));
  fs::remove(m.resolve(m.entries[2]));
  try {
    load_manifest(dir.path() / "out" / "manifest.csv");
    FAIL() << "missing files not reported";
  } catch (const ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(m.entries[0].path), std::string::npos);
    EXPECT_NE(what.find(m.entries[2].path), std::string::npos);
  }
}

TEST(Manifest, SchemaErrors) {
  const std::string head = "# corpus_id=x\n" + std::string(kManifestHeader) + "\n";
  EXPECT_NO_THROW(parse_manifest(head + "real/a.wav,real,none,,,train,a_seg0000,44100,1\n", "."));
  EXPECT_THROW(parse_manifest(head + "fake/a.wav,fake,haas,,200,train,a_seg0000,44100,1\n", "."),
               ParseError);
  EXPECT_THROW(parse_manifest(head + "fake/a.wav,fake,haas,right,,train,a_seg0000,44100,1\n", "."),
               ParseError);
  EXPECT_THROW(parse_manifest(head + "real/a.wav,real,none,,,train,a_seg0000,44100\n", "."),
               ParseError);
  EXPECT_THROW(parse_manifest(head + "real/a.wav,real,none,,,holdout,a_seg0000,44100,1\n", "."),
               ParseError);
  EXPECT_THROW(parse_manifest("real/a.wav,real,none,,,train,a,44100,1\n", "."), ParseError);
}

TEST(Corpus, RejectsBadOptions) {
  oracle::TempDir dir("corpusbad");
  const auto sources = synthesize_sources(2, 1.0, 8000, 1, dir.path() / "src");
  CorpusOptions opt;
  opt.test_cutoffs = {4500.0};  // 8 kHz is below twice this
  EXPECT_THROW(build_corpus(sources, opt, dir.path() / "out"), InvalidArgument);
  opt.test_cutoffs = {200.0};
  opt.split = 1.0;
  EXPECT_THROW(build_corpus(sources, opt, dir.path() / "out"), InvalidArgument);
  opt.split = 0.6;
  opt.train_cutoffs = {-1.0};
  EXPECT_THROW(build_corpus(sources, opt, dir.path() / "out"), InvalidArgument);
  EXPECT_THROW(build_corpus({}, CorpusOptions{}, dir.path() / "out"), InvalidArgument);
}

TEST(Names, RoundTrip) {
  for (auto s : {Split::kTrain, Split::kTest}) EXPECT_EQ(parse_split(to_string(s)), s);
  for (auto m : {ForgeryMethod::kNone, ForgeryMethod::kHaas, ForgeryMethod::kCopy}) {
    EXPECT_EQ(parse_forgery_method(to_string(m)), m);
  }
}
