// Serial reference vs OpenMP pair kernel, plus one full loss/gradient call.
//
//   ./build/bench/nsmc_bench --benchmark_filter=PairSums

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "nsmc/datagen.hpp"
#include "nsmc/loss.hpp"
#include "nsmc/pair_kernels.hpp"
#include "nsmc/parallel.hpp"

namespace {

struct Sides {
    std::vector<double> y, t, yp, tp;
};

Sides make_sides(std::size_t m) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n(0.0, 1.0);
    Sides s;
    for (std::size_t i = 0; i < m; ++i) {
        s.y.push_back(n(rng));
        s.t.push_back(n(rng));
        s.yp.push_back(n(rng));
        s.tp.push_back(n(rng));
    }
    return s;
}

void BM_PairSumsSerial(benchmark::State& state) {
    const Sides s = make_sides(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto r = nsmc::serial::pair_sums({s.y, s.t}, {s.yp, s.tp}, true);
        benchmark::DoNotOptimize(r.loss_sum);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_PairSumsParallel(benchmark::State& state) {
    const Sides s = make_sides(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto r = nsmc::parallel::pair_sums({s.y, s.t}, {s.yp, s.tp}, true);
        benchmark::DoNotOptimize(r.loss_sum);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_LossGrad(benchmark::State& state) {
    nsmc::GenerativeSpec spec;
    spec.weights = nsmc::gen_ground_truth(10, 10, 3, true, 1).weights;
    spec.m = static_cast<int>(state.range(0));
    const nsmc::SplitSample data = nsmc::split_samples(spec);
    const nsmc::SampleBatch om = data.batch(), op = data.batch_prime();
    nsmc::LossOptions o;
    o.fix_first_row = true;
    for (auto _ : state) {
        auto r = nsmc::loss_grad(spec.weights, om, op, o);
        benchmark::DoNotOptimize(r.value);
    }
}

} // namespace

BENCHMARK(BM_PairSumsSerial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairSumsParallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossGrad)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
