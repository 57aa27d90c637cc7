#pragma once

#include "qdgrasp/cvt.hpp"
#include "qdgrasp/environment.hpp"
#include "qdgrasp/history.hpp"
#include "qdgrasp/rng.hpp"
#include "qdgrasp/types.hpp"
#include "qdgrasp/variation.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdgrasp::algorithms {

enum class AlgorithmKind { nsmbs, nsmbs_no_bd2, nsmbs_no_bd3, ns_concat, map_elites, random };

std::string to_string(AlgorithmKind kind);
/// Throws ConfigError for unknown names.
AlgorithmKind kind_from_string(const std::string& name);
const std::vector<AlgorithmKind>& all_kinds();

struct AlgorithmConfig {
    AlgorithmKind kind = AlgorithmKind::nsmbs;
    std::size_t mu = 100;
    std::size_t lambda = 50;
    std::size_t generations = 1000;
    std::size_t k = 15;
    std::size_t archive_add_count = 6;
    std::size_t cvt_cells = 1000;
    variation::VariationConfig variation;
};

void validate(const AlgorithmConfig& cfg);

struct RunOptions {
    std::size_t parallel_evaluators = 1;
    // Behavior component whose grid coverage is logged each generation.
    std::size_t coverage_component = 3;
    std::size_t coverage_resolution = 10;
    // Record the eval ids of the survivors of every generation.
    bool keep_selection_trace = false;
};

struct RunResult {
    // Every successful individual ever evaluated, in evaluation order.
    std::vector<Individual> repertoire;
    // Novelty archive (NS variants) or the elites in cell order (MAP-Elites); empty for random search.
    std::vector<Individual> archive;
    std::vector<Individual> population;
    RunHistory history;
    std::vector<std::vector<std::int64_t>> selection_trace;
};

/// Thrown when the environment fails mid-run. Carries everything logged up to the failing
/// generation, with history.complete set to false.
class RunAborted : public std::runtime_error {
public:
    RunAborted(const std::string& what, RunResult partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {
    }
    const RunResult& partial() const { return partial_; }

private:
    RunResult partial_;
};

/// Components excluded from novelty and selection for the given algorithm.
std::vector<bool> active_components(AlgorithmKind kind, std::size_t n_b);

/// Single euclidean component spanning all components back to back.
BehaviorComponentSpec concatenated_spec(const std::vector<BehaviorComponentSpec>& specs);
/// Concatenated raw point; undefined components contribute raw zeros.
BehaviorPoint concatenate(const BehaviorVector& behavior, const std::vector<BehaviorComponentSpec>& specs);
/// Concatenated point with every coordinate normalized to [0,1] by its bound.
std::vector<double> concatenate_normalized(const BehaviorVector& behavior,
                                           const std::vector<BehaviorComponentSpec>& specs);
std::size_t concatenated_dim(const std::vector<BehaviorComponentSpec>& specs);

RunResult run_nsmbs(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng,
                    const RunOptions& options = {});
RunResult run_ns_concat(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng,
                        const RunOptions& options = {});
RunResult run_map_elites(const AlgorithmConfig& cfg, const Environment& env, const cvt::CvtGrid& grid,
                         const RngStream& rng, const RunOptions& options = {});
RunResult run_random(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng,
                     const RunOptions& options = {});

/// Dispatches on cfg.kind; `grid` is required for MAP-Elites only.
RunResult run(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng, const RunOptions& options = {},
              const cvt::CvtGrid* grid = nullptr);

} // namespace qdgrasp::algorithms
