// Serial vs OpenMP replicate runs, plus the per-frame kernels they are built from.
#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "meshdet/detectors.hpp"
#include "meshdet/experiment.hpp"
#include "meshdet/fft.hpp"
#include "meshdet/signal_model.hpp"

using namespace meshdet;

namespace {

void BM_Replicate(benchmark::State& state) {
    RunConfig cfg;
    cfg.duration_hr = 0.5;
    const ConfigEntry entry{static_cast<int>(state.range(0)), 12.0};
    RunOptions opt;
    opt.parallel = state.range(1) != 0;
    for (auto _ : state) {
        auto r = run_configuration(cfg, entry, 0, opt);
        benchmark::DoNotOptimize(r.detectors.data());
    }
    state.SetLabel(opt.parallel ? "parallel" : "serial");
}
BENCHMARK(BM_Replicate)->Args({10, 0})->Args({10, 1})->Args({50, 0})->Args({50, 1})->Unit(benchmark::kMillisecond);

void BM_Fft128(benchmark::State& state) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> g;
    std::vector<double> x(kFrameLen);
    for (auto& s : x) s = g(gen);
    for (auto _ : state) benchmark::DoNotOptimize(fft128_magnitudes(x));
}
BENCHMARK(BM_Fft128);

void BM_SignalFrame(benchmark::State& state) {
    NodeSignal sig(0, 3600.0, SignalParams{}, 5);
    Frame f;
    std::int64_t m = 0;
    for (auto _ : state) {
        sig.fill_frame(m++ % 2000, f);
        benchmark::DoNotOptimize(f.samples.data());
    }
}
BENCHMARK(BM_SignalFrame);

void BM_Detector(benchmark::State& state) {
    const auto kind = static_cast<DetectorKind>(state.range(0));
    NodeSignal sig(0, 3600.0, SignalParams{}, 5);
    std::vector<Frame> frames(1024);
    std::vector<FrameFeatures> feats;
    for (std::size_t m = 0; m < frames.size(); ++m) frames[m] = sig.frame(static_cast<std::int64_t>(m));
    for (const auto& f : frames) feats.push_back(FrameFeatures::compute(f));
    auto det = make_detector(default_detector_config(kind));
    std::size_t m = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(det->process(feats[m++ % feats.size()]));
    }
    state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_Detector)->DenseRange(0, 4);

}  // namespace

BENCHMARK_MAIN();
