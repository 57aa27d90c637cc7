#pragma once

#include "qdgrasp/history.hpp"
#include "qdgrasp/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace qdgrasp::metrics {

/// Cell of a uniform grid with `resolution` bins per normalized dimension (row-major).
std::size_t cell_index(std::span<const double> point, const BehaviorComponentSpec& spec, std::size_t resolution);

std::size_t cell_count(const BehaviorComponentSpec& spec, std::size_t resolution);

/// Fraction of grid cells of component `spec.index` holding at least one descriptor of a
/// successful individual.
double coverage(std::span<const Individual> repertoire, const BehaviorComponentSpec& spec, std::size_t resolution);

/// Same as coverage(), restricted to individuals born at or before `upto_generation`.
double coverage_upto(std::span<const Individual> repertoire, const BehaviorComponentSpec& spec, std::size_t resolution,
                     int upto_generation);

struct Ratio {
    double value = 0.0;
    // False when no evaluation was counted (value reported as 0).
    bool defined = false;
};

/// Successes over evaluations for generations 0..upto_generation (whole run when absent).
Ratio sample_efficiency(const EvaluationBudgetLedger& ledger, std::optional<std::size_t> upto_generation = std::nullopt);

/// Earliest generation with at least one success.
std::optional<int> first_success_generation(const EvaluationBudgetLedger& ledger);
std::optional<int> first_success_generation(const RunHistory& history);

/// Fraction of runs with at least one success. Throws std::invalid_argument on an empty list.
double successful_run_rate(std::span<const RunHistory> runs);

struct Summary {
    std::size_t n = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Median, quartiles (linear interpolation between order statistics), mean and sample std.
Summary summarize(std::vector<double> values);

/// Two-sided Wilcoxon rank-sum (Mann-Whitney U) p-value. Exact null distribution when there
/// are no ties and both samples are small, tie-corrected normal approximation otherwise.
double rank_sum_p_value(std::span<const double> a, std::span<const double> b);

} // namespace qdgrasp::metrics
