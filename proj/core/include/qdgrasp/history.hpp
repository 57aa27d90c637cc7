#pragma once

#include "qdgrasp/types.hpp"

#include <cstdint>
#include <vector>

namespace qdgrasp {

/// Metric sample logged at the end of one generation (generation 0 is the initial batch).
struct GenerationRecord {
    int generation = 0;
    std::int64_t evaluations = 0;
    std::int64_t successes = 0;
    std::int64_t cumulative_evaluations = 0;
    std::int64_t cumulative_successes = 0;
    double sample_efficiency = 0.0;
    double coverage = 0.0;
    std::int64_t repertoire_size = 0;
    std::int64_t archive_size = 0;

    bool operator==(const GenerationRecord&) const = default;
};

struct RunHistory {
    std::vector<GenerationRecord> generations;
    EvaluationBudgetLedger ledger;
    // Set when the run stopped early; the records cover the completed generations only.
    bool complete = true;
};

} // namespace qdgrasp
