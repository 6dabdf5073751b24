#include <benchmark/benchmark.h>

#include "ialf/alignment.hpp"
#include "ialf/channel.hpp"
#include "ialf/grassmann.hpp"
#include "ialf/quantizer.hpp"

using namespace ialf;

static void BM_Encode(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  const auto cb = quantizer::build_random_codebook(2, 3, bits, 5);
  Rng rng = make_rng(6);
  for (auto _ : state) {
    const auto x = grassmann::sample_uniform(2, 3, rng);
    benchmark::DoNotOptimize(quantizer::encode(x, cb));
  }
  state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << bits));
}
BENCHMARK(BM_Encode)->Arg(8)->Arg(12)->Arg(16);

static void BM_LeakageMin(benchmark::State& state) {
  const auto layout = alignment::ia_parameters(3, 1, 1).layout();
  const auto ch = channel::generate_channel(3, 1, 2, 17);
  const auto tones = channel::to_tone_domain(ch, layout.N);
  alignment::AlignmentOptions cfg;
  std::uint64_t s = 0;
  for (auto _ : state) {
    Rng rng = make_rng(18, s++);
    benchmark::DoNotOptimize(alignment::build_beamformers(tones, layout, cfg, rng));
  }
}
BENCHMARK(BM_LeakageMin)->Unit(benchmark::kMillisecond);

static void BM_ToToneDomain(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto ch = channel::generate_channel(3, 2, 4, 21);
  for (auto _ : state) benchmark::DoNotOptimize(channel::to_tone_domain(ch, N));
}
BENCHMARK(BM_ToToneDomain)->Arg(16)->Arg(256);

static void BM_EmpiricalBallCdf(benchmark::State& state) {
  std::uint64_t s = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grassmann::empirical_ball_cdf(3, 2, 0.5, 10'000, s++));
  }
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_EmpiricalBallCdf)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
