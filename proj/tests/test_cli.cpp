#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "stereofake/cli.hpp"
#include "stereofake/corpus.hpp"
#include "stereofake/detector.hpp"

using namespace stereofake;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// synth -> corpus -> train once for the whole suite.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("cli");
    const std::string d = dir_->path().string();
    ASSERT_EQ(cli({"synth", "--n", "30", "--seed", "5", "--out-dir", d + "/src"}).code, 0);
    ASSERT_EQ(cli({"corpus", "--sources", d + "/src", "--out-dir", d + "/corpus",
                   "--corpus-id", "cli", "--with-copy"})
                  .code,
              0);
    ASSERT_EQ(cli({"train", "--manifest", d + "/corpus/manifest.csv", "--out",
                   d + "/m.det"})
                  .code,
              0);
  }
  static void TearDownTestSuite() { delete dir_; }
  static fs::path path(const std::string& rel) { return dir_->path() / rel; }
  static oracle::TempDir* dir_;
};

oracle::TempDir* Pipeline::dir_ = nullptr;

}  // namespace

TEST(Cli, HelpListsFlagsWithDefaults) {
  const auto top = cli({"--help"});
  EXPECT_EQ(top.code, kExitOk);
  for (const char* sub : {"forge", "synth", "corpus", "train", "detect", "eval", "stats"}) {
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
  }
  const auto forge = cli({"forge", "--help"});
  EXPECT_EQ(forge.code, kExitOk);
  EXPECT_NE(forge.out.find("--cutoff"), std::string::npos);
  EXPECT_NE(forge.out.find("200"), std::string::npos);
  const auto synth = cli({"synth", "--help"});
  EXPECT_NE(synth.out.find("42"), std::string::npos);
  const auto train = cli({"train", "--help"});
  EXPECT_NE(train.out.find("0.4"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitInvalidArgs);
  EXPECT_EQ(cli({"bogus"}).code, kExitInvalidArgs);
  EXPECT_EQ(cli({"synth"}).code, kExitInvalidArgs);
  EXPECT_EQ(cli({"synth", "--out-dir", "x", "--n", "many"}).code, kExitInvalidArgs);
}

TEST(Cli, ForgeValidatesAndWrites) {
  oracle::TempDir dir("forge");
  const auto in = (dir.path() / "mono.wav").string();
  write_wav(MonoClip(std::vector<double>(4410, 0.25), 44100), in);

  EXPECT_EQ(cli({"forge", in, (dir.path() / "x.wav").string(), "--cutoff", "30000"}).code,
            kExitInvalidArgs);
  EXPECT_EQ(cli({"forge", in, (dir.path() / "x.wav").string(), "--side", "up"}).code,
            kExitInvalidArgs);
  EXPECT_EQ(cli({"forge", (dir.path() / "none.wav").string(),
                 (dir.path() / "x.wav").string()})
                .code,
            kExitIo);

  const auto haas = dir.path() / "haas.wav";
  const auto r = cli({"forge", in, haas.string(), "--cutoff", "200", "--side", "right"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("200"), std::string::npos);
  const auto y = read_stereo_wav(haas);
  EXPECT_EQ(y.left()[100], pcm16_to_amplitude(amplitude_to_pcm16(0.25)));
  EXPECT_LT(std::abs(y.right()[4000]), 0.01);

  const auto copy = dir.path() / "copy.wav";
  ASSERT_EQ(cli({"forge", in, copy.string(), "--method", "copy"}).code, kExitOk);
  EXPECT_TRUE(is_channel_copy(read_stereo_wav(copy)));

  // Stereo input goes through the mono policy.
  const auto st = dir.path() / "st.wav";
  write_wav(StereoClip(std::vector<double>(4410, 0.5), std::vector<double>(4410, -0.5), 44100), st);
  ASSERT_EQ(cli({"forge", st.string(), copy.string(), "--method", "copy",
                 "--mono-policy", "right"})
                .code,
            kExitOk);
  EXPECT_EQ(read_stereo_wav(copy).left()[0], pcm16_to_amplitude(amplitude_to_pcm16(-0.5)));
}

TEST(Cli, ConfigOverlay) {
  oracle::TempDir dir("config");
  const auto cfg = dir.path() / "run.cfg";
  std::ofstream(cfg) << "# synthetic sources\nn = 2\nduration=0.1\nseed=9\n";
  const auto out_dir = (dir.path() / "s").string();
  const auto r = cli({"synth", "--config", cfg.string(), "--out-dir", out_dir, "--seed", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "s" / "synth_3_00001.wav"));
  EXPECT_FALSE(fs::exists(dir.path() / "s" / "synth_3_00002.wav"));
  EXPECT_NE(r.err.find("seed=3"), std::string::npos);
  EXPECT_EQ(read_stereo_wav(dir.path() / "s" / "synth_3_00000.wav").size(), 4410u);

  std::ofstream(cfg) << "n=2\nbanana=1\n";
  EXPECT_EQ(cli({"synth", "--config", cfg.string(), "--out-dir", out_dir}).code,
            kExitInvalidArgs);
  EXPECT_EQ(cli({"synth", "--config", (dir.path() / "missing.cfg").string(), "--out-dir",
                 out_dir})
                .code,
            kExitIo);
}

TEST_F(Pipeline, DetectExitCodes) {
  const auto manifest = load_manifest(path("corpus/manifest.csv"));
  std::string haas, real, copy;
  for (const auto& e : manifest.entries) {
    if (e.split != Split::kTest) continue;
    if (e.method == ForgeryMethod::kHaas && e.cutoff_hz == 200.0 && haas.empty()) {
      haas = manifest.resolve(e).string();
    }
    if (e.method == ForgeryMethod::kCopy && copy.empty()) copy = manifest.resolve(e).string();
    if (e.label == Label::kReal && real.empty()) real = manifest.resolve(e).string();
  }
  const std::string model = path("m.det").string();

  const auto fake = cli({"detect", "--model", model, haas});
  EXPECT_EQ(fake.code, kExitFakeDetected) << fake.err;
  EXPECT_EQ(fake.out.rfind(haas + "\tfake\t", 0), 0u);
  EXPECT_EQ(std::count(fake.out.begin(), fake.out.end(), '\t'), 3);

  const auto c = cli({"detect", "--model", model, copy});
  EXPECT_EQ(c.code, kExitFakeDetected);
  EXPECT_EQ(c.out, copy + "\tfake\tNA\tNA\n");
  const auto c2 = cli({"detect", "--model", model, "--no-copy-check", copy});
  EXPECT_EQ(c2.out.find("NA"), std::string::npos);

  const auto both = cli({"detect", "--model", model, real, haas});
  EXPECT_EQ(std::count(both.out.begin(), both.out.end(), '\n'), 2);
  EXPECT_EQ(both.out.rfind(real + "\t", 0), 0u);

  const auto loaded = load_detector(model);
  if (detect(loaded, read_stereo_wav(real)).label == Label::kReal) {
    EXPECT_EQ(cli({"detect", "--model", model, real}).code, kExitOk);
  }
  EXPECT_EQ(cli({"detect", "--model", path("nope.det").string(), real}).code, kExitIo);
}

TEST_F(Pipeline, TrainRecordsPenaltyAndIsReproducible) {
  const auto text = slurp(path("m.det"));
  EXPECT_EQ(text.rfind("stereofake-detector\n", 0), 0u);
  EXPECT_NE(text.find("classifier 1st"), std::string::npos);
  EXPECT_NE(text.find("classifier 2nd"), std::string::npos);
  EXPECT_NE(text.find("C 0.40000000000000002"), std::string::npos);
  ASSERT_EQ(cli({"train", "--manifest", path("corpus/manifest.csv").string(), "--out",
                 path("m2.det").string(), "--C", "0.4"})
                .code,
            0);
  EXPECT_EQ(slurp(path("m2.det")), text);
  EXPECT_EQ(cli({"train", "--manifest", path("corpus/manifest.csv").string(), "--out",
                 path("m3.det").string(), "--C", "-1"})
                .code,
            kExitInvalidArgs);
}

TEST_F(Pipeline, EvalSingleCell) {
  const auto out = path("report.csv");
  const auto text = path("report.txt");
  const auto r = cli({"eval", "--models", path("m.det").string(), "--manifests",
                      path("corpus/manifest.csv").string(), "--out", out.string(),
                      "--text", text.string(), "--scopes", "fused", "--cutoffs", "200"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = slurp(out);
  EXPECT_EQ(csv.rfind("train_corpus,test_corpus,cutoff_hz,scope,acc,far,n_real,n_fake\ncli,cli,200,fused,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_TRUE(fs::exists(text));
}

TEST_F(Pipeline, StatsExport) {
  const auto out = path("stats.csv");
  ASSERT_EQ(cli({"stats", "--manifest", path("corpus/manifest.csv").string(), "--out",
                 out.string(), "--cutoffs", "200"})
                .code,
            kExitOk);
  const auto csv = slurp(out);
  EXPECT_EQ(csv.rfind("component,channel,label,min,q1,median,q3,max,mean\n", 0), 0u);
  // 40 components x 2 channels x 2 labels.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 160);
}

TEST_F(Pipeline, CorpusIsReproducible) {
  const std::string d = dir_->path().string();
  ASSERT_EQ(cli({"corpus", "--sources", d + "/src", "--out-dir", d + "/corpus2",
                 "--corpus-id", "cli", "--with-copy"})
                .code,
            0);
  EXPECT_EQ(slurp(path("corpus2/manifest.csv")), slurp(path("corpus/manifest.csv")));
}
