#include <benchmark/benchmark.h>

#include <random>

#include "dmad/classifier.hpp"
#include "dmad/metrics.hpp"
#include "dmad/scattering.hpp"

namespace {

dmad::Plane random_plane(int side) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  dmad::Plane p(side, side);
  for (double& v : p.values()) v = u(rng);
  return p;
}

void BM_FilterBank(benchmark::State& state) {
  dmad::ScatteringConfig config;
  config.rows = config.cols = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dmad::build_filter_bank(config));
}
BENCHMARK(BM_FilterBank)->Arg(64)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_ScatteringTransform(benchmark::State& state) {
  dmad::ScatteringConfig config;
  config.rows = config.cols = static_cast<int>(state.range(0));
  const dmad::FilterBank bank = dmad::build_filter_bank(config);
  const dmad::Plane x = random_plane(config.rows);
  for (auto _ : state) benchmark::DoNotOptimize(dmad::scattering_transform(x, bank));
}
BENCHMARK(BM_ScatteringTransform)->Arg(64)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_GramMatrix(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> x(static_cast<std::size_t>(state.range(0)),
                                     std::vector<double>(static_cast<std::size_t>(state.range(1))));
  for (auto& v : x) {
    for (double& e : v) e = n(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(dmad::gram_matrix(x, dmad::KernelSpec{}));
}
BENCHMARK(BM_GramMatrix)->Args({30, 259072})->Args({200, 4096})->Unit(benchmark::kMillisecond);

void BM_DEer(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  dmad::ScoreSet s;
  for (int64_t i = 0; i < state.range(0); ++i) {
    s.attack_scores.push_back(n(rng) + 1.0);
    s.bonafide_scores.push_back(n(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(dmad::d_eer(s));
}
BENCHMARK(BM_DEer)->Arg(100)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
