#include "qdgrasp/grasp_env.hpp"
#include "qdgrasp/novelty.hpp"
#include "qdgrasp/rng.hpp"

#include <benchmark/benchmark.h>

using namespace qdgrasp;

namespace {

std::vector<Individual> population(std::size_t n, const std::vector<BehaviorComponentSpec>& specs)
{
    RngStream rng(3, "bench");
    std::vector<Individual> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].eval_id = static_cast<std::int64_t>(i);
        for (const auto& s : specs) {
            BehaviorPoint p;
            for (const auto& b : s.bounds)
                p.push_back(rng.uniform(b.lo, b.hi));
            out[i].behavior.components.emplace_back(p);
        }
    }
    return out;
}

// Build the index over n points and score all of them, as one generation does.
void BM_NoveltyGeneration(benchmark::State& state)
{
    const auto specs = grasp::behavior_specs(grasp::EnvConfig{});
    const auto pop = population(static_cast<std::size_t>(state.range(0)), specs);
    for (auto _ : state) {
        const auto ref = novelty::make_reference_set({pop});
        const novelty::NoveltyQueryIndex index(ref, specs);
        double acc = 0.0;
        for (const auto& ind : pop)
            acc += *novelty::knn_novelty(ind, index, 15)[0];
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NoveltyGeneration)->Arg(500)->Arg(3150)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace
