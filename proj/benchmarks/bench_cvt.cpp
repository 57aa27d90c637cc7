#include "qdgrasp/cvt.hpp"

#include <benchmark/benchmark.h>

using namespace qdgrasp;

static void BM_BuildCvt(benchmark::State& state)
{
    for (auto _ : state) {
        RngStream rng(1, "cvt");
        auto grid = cvt::build_cvt(static_cast<std::size_t>(state.range(0)), 6, rng);
        benchmark::DoNotOptimize(grid);
    }
}
BENCHMARK(BM_BuildCvt)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond)->Iterations(1);

static void BM_NearestCell(benchmark::State& state)
{
    RngStream rng(1, "cvt");
    const auto grid = cvt::build_cvt(1000, 6, rng);
    RngStream q(2, "query");
    std::vector<double> p(6);
    for (auto _ : state) {
        for (auto& v : p)
            v = q.uniform01();
        benchmark::DoNotOptimize(cvt::nearest_cell(p, grid));
    }
}
BENCHMARK(BM_NearestCell);
