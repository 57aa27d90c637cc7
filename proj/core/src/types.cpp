#include "qdgrasp/types.hpp"

#include "qdgrasp/rng.hpp"

#include <algorithm>

namespace qdgrasp {

void validate_bounds(const Bounds& bounds)
{
    for (std::size_t j = 0; j < bounds.size(); ++j) {
        if (!(bounds[j].lo < bounds[j].hi))
            throw ConfigError("invalid bound at coordinate " + std::to_string(j) + ": lo must be < hi");
    }
}

bool within_bounds(const Genome& g, const Bounds& bounds)
{
    if (g.size() != bounds.size())
        return false;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!bounds[j].contains(g[j]))
            return false;
    }
    return true;
}

std::string to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "wrapped_angle"; }

Metric metric_from_string(const std::string& s)
{
    if (s == "euclidean")
        return Metric::euclidean;
    if (s == "wrapped_angle" || s == "wrapped-angle")
        return Metric::wrapped_angle;
    throw ConfigError("unknown metric '" + s + "'");
}

void validate_specs(std::span<const BehaviorComponentSpec> specs)
{
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        if (s.index != i)
            throw ConfigError("behavior component indices must be dense and ordered");
        if (s.dim == 0 || s.bounds.size() != s.dim)
            throw ConfigError("behavior component " + std::to_string(i) + " has inconsistent dimension");
        if (s.metric == Metric::wrapped_angle && s.dim != 1)
            throw ConfigError("wrapped-angle metric requires a one-dimensional component");
        validate_bounds(s.bounds);
    }
}

double normalize_coordinate(double v, const Interval& bound)
{
    return std::clamp((v - bound.lo) / bound.width(), 0.0, 1.0);
}

void EvaluationBudgetLedger::record_generation(std::int64_t evaluations, std::int64_t successes)
{
    if (evaluations < 0 || successes < 0 || successes > evaluations)
        throw std::logic_error("ledger entry violates 0 <= successes <= evaluations");
    per_generation_.push_back({evaluations, successes});
    total_evaluations_ += evaluations;
    successful_evaluations_ += successes;
}

EvaluationBudgetLedger EvaluationBudgetLedger::from_entries(std::vector<Entry> entries)
{
    EvaluationBudgetLedger ledger;
    for (const auto& e : entries)
        ledger.record_generation(e.evaluations, e.successes);
    return ledger;
}

Genome random_genome(const Bounds& bounds, RngStream& rng)
{
    Genome g;
    g.params.reserve(bounds.size());
    for (const auto& b : bounds)
        g.params.push_back(rng.uniform(b.lo, b.hi));
    return g;
}

std::vector<Genome> generate_random_population(std::size_t mu, const Bounds& bounds, RngStream& rng)
{
    if (mu == 0)
        throw ConfigError("population size must be at least 1");
    validate_bounds(bounds);
    std::vector<Genome> pop;
    pop.reserve(mu);
    for (std::size_t i = 0; i < mu; ++i)
        pop.push_back(random_genome(bounds, rng));
    return pop;
}

} // namespace qdgrasp
