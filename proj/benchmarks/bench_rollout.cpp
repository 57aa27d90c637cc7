#include "qdgrasp/grasp_env.hpp"
#include "qdgrasp/rng.hpp"

#include <benchmark/benchmark.h>

using namespace qdgrasp;

static void BM_Rollout(benchmark::State& state)
{
    const grasp::GraspEnvironment env{grasp::EnvConfig{}};
    RngStream rng(5, "bench");
    std::vector<Genome> genomes;
    for (int i = 0; i < 256; ++i)
        genomes.push_back(random_genome(env.genome_bounds(), rng));
    std::size_t i = 0;
    for (auto _ : state) {
        auto e = env.evaluate(genomes[i++ % genomes.size()]);
        benchmark::DoNotOptimize(e);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
