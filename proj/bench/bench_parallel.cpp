// Serial reference vs OpenMP batch kernels. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "stereofake/corpus.hpp"
#include "stereofake/features.hpp"
#include "stereofake/forgery.hpp"

using namespace stereofake;

namespace {

const std::vector<StereoClip>& batch() {
  static const std::vector<StereoClip> clips = [] {
    std::mt19937_64 rng(42);
    std::vector<StereoClip> out;
    for (int i = 0; i < 64; ++i) out.push_back(synthesize_clip(rng, 44100, 44100));
    return out;
  }();
  return clips;
}

void BM_ExtractFeatures(benchmark::State& state) {
  const auto exec = state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
  const auto& clips = batch();
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_features(clips, FeatureSettings{}, exec));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(clips.size()));
  state.SetLabel(exec == Execution::kSerial ? "serial" : "parallel");
}
BENCHMARK(BM_ExtractFeatures)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_HaasForgery(benchmark::State& state) {
  const FilterSpec spec(200.0, 44100);
  const auto& clips = batch();
  for (auto _ : state) {
    for (const auto& clip : clips) {
      benchmark::DoNotOptimize(fake_stereo_haas(to_mono(clip), spec, FakedSide::kRight));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(clips.size()));
}
BENCHMARK(BM_HaasForgery)->Unit(benchmark::kMillisecond);

void BM_SynthesizeSources(benchmark::State& state) {
  const auto dir = std::filesystem::temp_directory_path() / "stereofake_bench_synth";
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize_sources(32, 1.0, 44100, 7, dir));
  }
  std::filesystem::remove_all(dir);
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_SynthesizeSources)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
