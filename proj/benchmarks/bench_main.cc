#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "maskcue/cqt.h"
#include "maskcue/features.h"
#include "maskcue/gmm.h"
#include "maskcue/inst_freq.h"
#include "maskcue/signal.h"

using namespace maskcue;

namespace {

Waveform noise_signal(double seconds, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  Waveform w;
  w.sample_rate_hz = 16000;
  w.samples.resize(static_cast<std::size_t>(seconds * 16000));
  for (double& s : w.samples) s = g(rng);
  return w;
}

void BM_Dft(benchmark::State& state) {
  const Waveform w = noise_signal(state.range(0) / 16000.0);
  for (auto _ : state) benchmark::DoNotOptimize(dft(std::span<const double>(w.samples)));
}
BENCHMARK(BM_Dft)->Arg(512)->Arg(16000)->Arg(16384);

void BM_SubbandInstFreq(benchmark::State& state) {
  const Waveform w = noise_signal(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(subband_instantaneous_frequency(w, 60, 0.0, 8000.0, 1e-12));
}
BENCHMARK(BM_SubbandInstFreq)->Unit(benchmark::kMillisecond);

void BM_Cqt(benchmark::State& state) {
  const Waveform w = noise_signal(1.0);
  const CqtKernel kernel(16000, 8000.0 / 512.0, 8000.0, 96);
  for (auto _ : state) benchmark::DoNotOptimize(cqt(w, kernel, 320, 160));
}
BENCHMARK(BM_Cqt)->Unit(benchmark::kMillisecond);

void BM_CqtResample(benchmark::State& state) {
  const Waveform w = noise_signal(1.0);
  const CqtKernel kernel(16000, 8000.0 / 512.0, 8000.0, 96);
  const UniformResampler resampler(kernel, 16);
  const Matrix logp = cqt_log_power(cqt(w, kernel, 320, 160));
  for (auto _ : state) benchmark::DoNotOptimize(resampler.apply(logp));
}
BENCHMARK(BM_CqtResample)->Unit(benchmark::kMillisecond);

void BM_Extract(benchmark::State& state) {
  const Waveform w = noise_signal(1.0);
  const FeatureExtractor extract(static_cast<FeatureKind>(state.range(0)), FeatureConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(extract(w));
  state.SetLabel(std::string(feature_kind_name(extract.kind())));
}
BENCHMARK(BM_Extract)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

Matrix gaussian_frames(int rows, int dim) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Matrix x(rows, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

void BM_FrameLogLikelihood(benchmark::State& state) {
  const Matrix x = gaussian_frames(20000, 90);
  GmmConfig cfg;
  cfg.n_components = static_cast<int>(state.range(0));
  cfg.max_iters = 1;
  const Gmm g = em_train(x, cfg).model;
  for (auto _ : state) benchmark::DoNotOptimize(frame_log_likelihoods(g, x));
}
BENCHMARK(BM_FrameLogLikelihood)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EmIteration(benchmark::State& state) {
  const Matrix x = gaussian_frames(20000, 90);
  GmmConfig cfg;
  cfg.n_components = 64;
  cfg.max_iters = static_cast<int>(state.range(0));
  cfg.tol = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(em_train(x, cfg));
}
BENCHMARK(BM_EmIteration)->Arg(0)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
