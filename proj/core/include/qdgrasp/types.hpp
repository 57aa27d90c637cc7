#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdgrasp {

/// Raised for invalid user-facing configuration (bounds, sizes, config files).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an environment cannot evaluate a genome (e.g. non-finite joint values).
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

using Bounds = std::vector<Interval>;

/// Throws ConfigError unless every interval satisfies lo < hi.
void validate_bounds(const Bounds& bounds);

/// Policy parameters, one coordinate per bound.
struct Genome {
    std::vector<double> params;

    std::size_t size() const { return params.size(); }
    double operator[](std::size_t i) const { return params[i]; }
    double& operator[](std::size_t i) { return params[i]; }
    bool operator==(const Genome&) const = default;
};

bool within_bounds(const Genome& g, const Bounds& bounds);

enum class Metric { euclidean, wrapped_angle };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

struct BehaviorComponentSpec {
    std::size_t index = 0;
    std::size_t dim = 1;
    Metric metric = Metric::euclidean;
    Bounds bounds;
    std::string name;
};

/// Checks dense unique indices and the wrapped-angle dimension restriction.
void validate_specs(std::span<const BehaviorComponentSpec> specs);

/// Maps a coordinate into [0,1] using its bound, clamping outside values.
double normalize_coordinate(double v, const Interval& bound);

using BehaviorPoint = std::vector<double>;

struct BehaviorVector {
    std::vector<std::optional<BehaviorPoint>> components;

    std::size_t size() const { return components.size(); }
    bool defined(std::size_t i) const { return components[i].has_value(); }
    bool operator==(const BehaviorVector&) const = default;
};

/// Outcome of one environment rollout.
struct Evaluation {
    BehaviorVector behavior;
    bool success = false;
    double quality = 0.0;
};

struct Individual {
    Genome genome;
    BehaviorVector behavior;
    // One entry per behavior component for multi-space search, a single entry for
    // concatenated-space search, empty when the algorithm computes no novelty.
    std::vector<std::optional<double>> novelty;
    bool success = false;
    double quality = 0.0;
    std::int64_t eval_id = -1;
    int generation_born = 0;
};

/// Counts evaluations and successes, generation by generation.
class EvaluationBudgetLedger {
public:
    struct Entry {
        std::int64_t evaluations = 0;
        std::int64_t successes = 0;
        bool operator==(const Entry&) const = default;
    };

    void record_generation(std::int64_t evaluations, std::int64_t successes);

    std::int64_t total_evaluations() const { return total_evaluations_; }
    std::int64_t successful_evaluations() const { return successful_evaluations_; }
    const std::vector<Entry>& per_generation() const { return per_generation_; }

    /// Rebuilds a ledger from per-generation entries, checking the success <= evaluation invariant.
    static EvaluationBudgetLedger from_entries(std::vector<Entry> entries);

private:
    std::int64_t total_evaluations_ = 0;
    std::int64_t successful_evaluations_ = 0;
    std::vector<Entry> per_generation_;
};

class RngStream;

/// Draws mu genomes with each coordinate uniform in its bound.
std::vector<Genome> generate_random_population(std::size_t mu, const Bounds& bounds, RngStream& rng);

Genome random_genome(const Bounds& bounds, RngStream& rng);

} // namespace qdgrasp
