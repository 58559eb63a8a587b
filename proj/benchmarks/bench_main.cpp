#include "tickwarp/acf.hpp"
#include "tickwarp/kernel.hpp"
#include "tickwarp/numeric.hpp"
#include "tickwarp/synth.hpp"
#include "tickwarp/theta.hpp"
#include "tickwarp/warp.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace tickwarp;

namespace {

ThetaModel kghm() { return ThetaModel::quadratic(-1640.65, 29999.47, 24.465, 25200.0); }

MarkSeries poisson_marks(std::size_t n_ticks) {
    const auto theta = kghm();
    std::mt19937_64 rng(10);
    std::normal_distribution<double> z;
    MarkSeries s;
    std::vector<double> x;
    for (std::size_t d = 0; s.size() < n_ticks; ++d) {
        const auto t = thinned_event_times(theta, rng);
        x.resize(t.size());
        for (double& v : x) v = z(rng);
        s.add_day(synthetic_date(d), t, x);
    }
    return s;
}

void BM_AcfSlotted(benchmark::State& state) {
    const auto s = poisson_marks(static_cast<std::size_t>(state.range(0)));
    SlotOptions o;
    o.slot_width = 24.465;
    o.max_lag = 600.0;
    for (auto _ : state) benchmark::DoNotOptimize(acf_slotted(s, o));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_AcfSlotted)->Arg(100000)->Arg(1600000)->Unit(benchmark::kMillisecond);

void BM_AcfTimeUniform(benchmark::State& state) {
    const auto s = poisson_marks(200000);
    SlotOptions o;
    o.slot_width = 24.465;
    o.max_lag = 600.0;
    o.weighting = PairWeighting::TimeUniform;
    for (auto _ : state) benchmark::DoNotOptimize(acf_slotted(s, o));
}
BENCHMARK(BM_AcfTimeUniform)->Unit(benchmark::kMillisecond);

void BM_OmegaCurve(benchmark::State& state) {
    const WarpFn w(kghm());
    const auto dts = numeric::linear_grid(24.465, 6300.0, 100);
    for (auto _ : state) benchmark::DoNotOptimize(omega_curve(w, dts));
}
BENCHMARK(BM_OmegaCurve)->Unit(benchmark::kMillisecond);

void BM_LagDistribution(benchmark::State& state) {
    const WarpFn w(kghm());
    for (auto _ : state) benchmark::DoNotOptimize(lag_distribution(w, 600.0));
}
BENCHMARK(BM_LagDistribution)->Unit(benchmark::kMillisecond);

void BM_GenSeasonalDays(benchmark::State& state) {
    SynthConfig cfg;
    cfg.theta = kghm();
    cfg.acf = AcfKind::positive_exp(300.0);
    cfg.n_days = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(gen_seasonal_days(cfg));
}
BENCHMARK(BM_GenSeasonalDays)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
