#pragma once

#include "qdgrasp/rng.hpp"
#include "qdgrasp/types.hpp"

#include <span>
#include <vector>

namespace qdgrasp::selection {

/// Survivor selection over several behavior components.
///
/// Repeatedly draws a component uniformly among those with at least one remaining eligible
/// candidate (novelty defined), takes the most novel eligible candidate on it and removes it
/// from the pool. When no remaining candidate is eligible on any component, the rest of the
/// output is filled by uniform draws without replacement. Returns positions in `candidates`
/// in pick order.
std::vector<std::size_t> multi_bc_select_indices(std::span<const Individual> candidates, std::size_t mu,
                                                 std::size_t n_b, RngStream& rng);

std::vector<Individual> multi_bc_select(std::span<const Individual> candidates, std::size_t mu, std::size_t n_b,
                                        RngStream& rng);

/// Classic novelty search truncation on novelty[0]: highest first, ties by lowest eval id.
std::vector<std::size_t> ns_select_indices(std::span<const Individual> candidates, std::size_t mu);

std::vector<Individual> ns_select(std::span<const Individual> candidates, std::size_t mu);

} // namespace qdgrasp::selection
