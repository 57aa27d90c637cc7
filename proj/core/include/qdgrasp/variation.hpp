#pragma once

#include "qdgrasp/rng.hpp"
#include "qdgrasp/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace qdgrasp::variation {

enum class OperatorOrder { crossover_then_mutation, mutation_then_crossover };

struct VariationConfig {
    double sigma = 0.1;
    // Negative means 1 / genome size.
    double p_mut = -1.0;
    double p_cx = 0.5;
    OperatorOrder order = OperatorOrder::crossover_then_mutation;

    double mutation_rate(std::size_t genome_size) const
    {
        return p_mut < 0.0 ? 1.0 / static_cast<double>(genome_size) : p_mut;
    }
};

void validate(const VariationConfig& cfg);

/// Uniform draws with replacement.
std::vector<Individual> select_parents(std::span<const Individual> pop, std::size_t lambda, RngStream& rng);

/// Same draws as select_parents, returned as positions in `pop`.
std::vector<std::size_t> select_parent_indices(std::size_t pop_size, std::size_t lambda, RngStream& rng);

/// Gaussian bounded mutation: each coordinate, with probability p_mut, gets
/// N(0, (sigma * range)^2) added and is clamped to its bound.
Genome mutate(const Genome& g, double sigma, double p_mut, const Bounds& bounds, RngStream& rng);

/// Uniform crossover applied with probability p_cx; otherwise the children are copies.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, double p_cx, RngStream& rng);

/// Pairs consecutive parents, applies crossover and mutation in the configured order
/// and returns exactly parents.size() children. An odd last parent is paired with the first.
std::vector<Genome> operate(std::span<const Genome> parents, const VariationConfig& cfg, const Bounds& bounds,
                            RngStream& rng);

} // namespace qdgrasp::variation
