// Microbenchmarks for the hot paths: the 32x32 transform, whole-segment
// feature extraction, single-representation prediction, and full ladder
// construction.

#include <benchmark/benchmark.h>

#include <array>
#include <random>

#include "ladderkit/complexity.hpp"
#include "ladderkit/dct.hpp"
#include "ladderkit/frames.hpp"
#include "ladderkit/ladder.hpp"
#include "ladderkit/model_bundle.hpp"
#include "ladderkit/training.hpp"

using namespace ladderkit;

namespace {

std::array<double, kBlockSamples> random_block(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::array<double, kBlockSamples> block;
  for (double& v : block) {
    v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 255.0;
  }
  return block;
}

FrameSequence random_segment(int width, int height, int frames) {
  std::mt19937_64 rng(99);
  FrameSequence seq;
  seq.width = width;
  seq.height = height;
  for (int t = 0; t < frames; ++t) {
    Frame fr;
    fr.y.resize(static_cast<size_t>(width) * height);
    fr.u.resize(static_cast<size_t>(width / 2) * (height / 2));
    fr.v.resize(fr.u.size());
    for (auto& px : fr.y) px = static_cast<uint16_t>(rng() % 256);
    for (auto& px : fr.u) px = static_cast<uint16_t>(rng() % 256);
    for (auto& px : fr.v) px = static_cast<uint16_t>(rng() % 256);
    seq.frames.push_back(std::move(fr));
  }
  return seq;
}

const ModelBundle& trained_bundle() {
  static const ModelBundle bundle = [] {
    SyntheticDatasetOptions options;
    options.n_segments = 24;
    options.seed = 5;
    return train_bundle(generate_synthetic_dataset(SyntheticOracle{}, options));
  }();
  return bundle;
}

const SegmentFeatures kFeatures{24.0, 6.5, 120.0, 8.0, 7.0, 110.0, 105.0};

void BM_Dct32(benchmark::State& state) {
  const auto block = random_block(1);
  std::array<double, kBlockSamples> coeffs;
  for (auto _ : state) {
    dct2d_32(block, coeffs);
    benchmark::DoNotOptimize(coeffs);
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_BlockStats(benchmark::State& state) {
  const auto block = random_block(2);
  for (auto _ : state) {
    BlockDctStats stats = block_dct_stats(block);
    benchmark::DoNotOptimize(stats);
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_AnalyzeSegment(benchmark::State& state) {
  const FrameSequence seq = random_segment(640, 360, 3);
  for (auto _ : state) {
    SegmentFeatures f = analyze_segment(seq);
    benchmark::DoNotOptimize(f);
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_PredictRepresentation(benchmark::State& state) {
  const ModelBundle& bundle = trained_bundle();
  for (auto _ : state) {
    const double x = predict_xpsnr(bundle, kFeatures, 1080, 2.4);
    const double e = predict_enc_time(bundle, kFeatures, 1080, 2.4);
    benchmark::DoNotOptimize(x);
    benchmark::DoNotOptimize(e);
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_BuildLadder(benchmark::State& state) {
  const ModelBundle& bundle = trained_bundle();
  LadderConfig cfg;
  cfg.max_enc_time_s = 400.0;
  cfg.jnd_db = 1.0;
  for (auto _ : state) {
    BitrateLadder ladder = build_ladder(bundle, kFeatures, cfg, "bench");
    benchmark::DoNotOptimize(ladder);
  }
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_Dct32);
BENCHMARK(BM_BlockStats);
BENCHMARK(BM_AnalyzeSegment)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictRepresentation)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BuildLadder)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
