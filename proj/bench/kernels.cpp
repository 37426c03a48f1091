// Serial reference vs OpenMP kernels. Thread count comes from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "moodspring/dsp/mfcc.hpp"
#include "moodspring/models.hpp"
#include "moodspring/rng.hpp"

using namespace moodspring;

namespace {

dsp::AudioClip test_clip(double seconds) {
  const int rate = dsp::kPipelineRate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  dsp::AudioClip clip{std::vector<double>(n), rate};
  Rng rng(1);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * 220.0 * i / rate) + 0.05 * (rng.uniform() - 0.5);
  }
  return clip;
}

Matrix random_points(std::size_t rows, std::size_t dim) {
  Rng rng(2);
  Matrix m(rows, dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& v : m.row(i)) v = rng.uniform();
  }
  return m;
}

void BM_mfcc_serial(benchmark::State& state) {
  const auto clip = test_clip(static_cast<double>(state.range(0)));
  const dsp::MfccExtractor ex(dsp::MfccConfig{}, clip.sample_rate);
  for (auto _ : state) benchmark::DoNotOptimize(ex.compute_serial(clip));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(clip.samples.size()));
}

void BM_mfcc_openmp(benchmark::State& state) {
  const auto clip = test_clip(static_cast<double>(state.range(0)));
  const dsp::MfccExtractor ex(dsp::MfccConfig{}, clip.sample_rate);
  for (auto _ : state) benchmark::DoNotOptimize(ex.compute(clip));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(clip.samples.size()));
}

void BM_knn_distances_serial(benchmark::State& state) {
  const auto points = random_points(static_cast<std::size_t>(state.range(0)), 52);
  const std::vector<double> query(52, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(models::squared_distances_serial(points, query));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_knn_distances_openmp(benchmark::State& state) {
  const auto points = random_points(static_cast<std::size_t>(state.range(0)), 52);
  const std::vector<double> query(52, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(models::squared_distances(points, query));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

// 3 s is the live tick window.
BENCHMARK(BM_mfcc_serial)->Arg(3)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mfcc_openmp)->Arg(3)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_knn_distances_serial)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_knn_distances_openmp)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
