#include <benchmark/benchmark.h>

#include "vtckit/dsp.hpp"
#include "vtckit/eval.hpp"
#include "vtckit/model.hpp"
#include "vtckit/rng.hpp"
#include "vtckit/vtc.hpp"

namespace {

using namespace vtckit;

dsp::FrameMatrix random_frames(int channels, int frames, std::uint64_t seed) {
  dsp::FrameMatrix m;
  m.channels = channels;
  m.frames = frames;
  m.values.resize(static_cast<std::size_t>(channels) * frames);
  rng::Xoshiro256pp gen(seed);
  for (auto& v : m.values) v = gen.gaussian();
  return m;
}

dsp::AudioBuffer random_audio(double seconds, int sr, std::uint64_t seed) {
  dsp::AudioBuffer audio;
  audio.sample_rate = sr;
  audio.samples.resize(static_cast<std::size_t>(seconds * sr));
  rng::Xoshiro256pp gen(seed);
  for (auto& s : audio.samples) s = 0.3 * gen.gaussian();
  return audio;
}

void BM_fvtc(benchmark::State& state) {
  const auto frames = random_frames(15, static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vtc::fvtc(frames, vtc::VtcConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * 15 * 15 * 80);
}
BENCHMARK(BM_fvtc)->Arg(300)->Arg(1000)->Arg(3000);

void BM_evtc(benchmark::State& state) {
  const auto tensor = vtc::fvtc(random_frames(15, 300, 2), vtc::VtcConfig{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(vtc::evtc(tensor));
  }
}
BENCHMARK(BM_evtc);

void BM_mfcc(benchmark::State& state) {
  const auto audio = random_audio(static_cast<double>(state.range(0)), 16000, 3);
  const dsp::DspConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsp::mfcc(audio, cfg));
  }
}
BENCHMARK(BM_mfcc)->Arg(1)->Arg(10)->Arg(30);

void BM_elastic_net(benchmark::State& state) {
  const std::size_t n = 100, p = 75;
  rng::Xoshiro256pp gen(4);
  std::vector<double> x(n * p), y(n);
  for (auto& v : x) v = gen.gaussian();
  for (auto& v : y) v = gen.gaussian() * 20.0 + 30.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::fit_elastic_net(x, n, p, y, {}));
  }
}
BENCHMARK(BM_elastic_net);

void BM_studentized_range_cdf(benchmark::State& state) {
  double q = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval::studentized_range_cdf(q, 3, 60));
    q = q < 5.0 ? q + 0.01 : 2.0;
  }
}
BENCHMARK(BM_studentized_range_cdf);

}  // namespace

BENCHMARK_MAIN();
