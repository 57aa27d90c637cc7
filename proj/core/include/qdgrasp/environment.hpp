#pragma once

#include "qdgrasp/types.hpp"

#include <vector>

namespace qdgrasp {

/// Evaluation backend seen by the search algorithms.
///
/// evaluate() must be a pure function of the genome and the environment's own configuration:
/// algorithms call it concurrently from several threads.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::size_t genome_size() const = 0;
    virtual const Bounds& genome_bounds() const = 0;
    virtual const std::vector<BehaviorComponentSpec>& behavior_specs() const = 0;
    virtual Evaluation evaluate(const Genome& genome) const = 0;
};

} // namespace qdgrasp
