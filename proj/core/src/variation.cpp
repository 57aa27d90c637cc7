#include "qdgrasp/variation.hpp"

#include <algorithm>
#include <stdexcept>

namespace qdgrasp::variation {

void validate(const VariationConfig& cfg)
{
    if (!(cfg.sigma > 0.0))
        throw ConfigError("variation.sigma must be > 0");
    if (cfg.p_mut > 1.0)
        throw ConfigError("variation.p_mut must be <= 1");
    if (cfg.p_cx < 0.0 || cfg.p_cx > 1.0)
        throw ConfigError("variation.p_cx must lie in [0, 1]");
}

std::vector<std::size_t> select_parent_indices(std::size_t pop_size, std::size_t lambda, RngStream& rng)
{
    if (pop_size == 0)
        throw std::logic_error("select_parents: empty population");
    std::vector<std::size_t> out(lambda);
    for (auto& i : out)
        i = rng.index(pop_size);
    return out;
}

std::vector<Individual> select_parents(std::span<const Individual> pop, std::size_t lambda, RngStream& rng)
{
    std::vector<Individual> out;
    out.reserve(lambda);
    for (std::size_t i : select_parent_indices(pop.size(), lambda, rng))
        out.push_back(pop[i]);
    return out;
}

Genome mutate(const Genome& g, double sigma, double p_mut, const Bounds& bounds, RngStream& rng)
{
    if (g.size() != bounds.size())
        throw std::logic_error("mutate: genome and bounds differ in length");
    Genome out = g;
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!rng.bernoulli(p_mut))
            continue;
        const double delta = rng.normal() * sigma * bounds[j].width();
        out[j] = std::clamp(out[j] + delta, bounds[j].lo, bounds[j].hi);
    }
    return out;
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, double p_cx, RngStream& rng)
{
    if (a.size() != b.size())
        throw std::logic_error("crossover: parents differ in length");
    std::pair<Genome, Genome> children{a, b};
    if (!rng.bernoulli(p_cx))
        return children;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (rng.bernoulli(0.5))
            std::swap(children.first[j], children.second[j]);
    }
    return children;
}

std::vector<Genome> operate(std::span<const Genome> parents, const VariationConfig& cfg, const Bounds& bounds,
                            RngStream& rng)
{
    std::vector<Genome> children;
    children.reserve(parents.size() + 1);
    const std::size_t n = parents.size();
    for (std::size_t i = 0; i < n; i += 2) {
        Genome a = parents[i];
        Genome b = parents[i + 1 < n ? i + 1 : 0];
        const double p_mut = cfg.mutation_rate(a.size());
        if (cfg.order == OperatorOrder::crossover_then_mutation) {
            auto [c1, c2] = crossover(a, b, cfg.p_cx, rng);
            children.push_back(mutate(c1, cfg.sigma, p_mut, bounds, rng));
            children.push_back(mutate(c2, cfg.sigma, p_mut, bounds, rng));
        }
        else {
            a = mutate(a, cfg.sigma, p_mut, bounds, rng);
            b = mutate(b, cfg.sigma, p_mut, bounds, rng);
            auto [c1, c2] = crossover(a, b, cfg.p_cx, rng);
            children.push_back(std::move(c1));
            children.push_back(std::move(c2));
        }
    }
    children.resize(n);
    return children;
}

} // namespace qdgrasp::variation
