#pragma once

#include "qdgrasp/types.hpp"

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace qdgrasp::novelty {

/// Distance between two raw behavior points of one component.
///
/// Euclidean components are compared after mapping every coordinate to [0,1] with the
/// component bounds; wrapped-angle components use |angle difference| folded into [0, pi],
/// divided by pi.
double component_distance(std::span<const double> x, std::span<const double> y, const BehaviorComponentSpec& spec);

/// One member of a novelty reference set.
struct ReferencePoint {
    std::int64_t id = -1;
    const BehaviorVector* behavior = nullptr;
};

/// Collects reference points from several individual lists, dropping repeated eval ids.
std::vector<ReferencePoint> make_reference_set(std::initializer_list<std::span<const Individual>> groups);

/// Per-component exact nearest-neighbor index over the defined behaviors of a reference set.
///
/// Components listed as inactive (masked) are not indexed and always yield an undefined
/// novelty. Below `tree_threshold` points a component is scanned linearly; above it a
/// k-d tree (euclidean) or a sorted circular array (wrapped-angle) answers queries.
/// Immutable after construction; concurrent queries are safe.
class NoveltyQueryIndex {
public:
    static constexpr std::size_t default_tree_threshold = 2000;

    NoveltyQueryIndex(std::span<const ReferencePoint> reference, std::vector<BehaviorComponentSpec> specs,
                      std::vector<bool> active = {}, std::size_t tree_threshold = default_tree_threshold);
    ~NoveltyQueryIndex();
    NoveltyQueryIndex(NoveltyQueryIndex&&) noexcept;
    NoveltyQueryIndex& operator=(NoveltyQueryIndex&&) noexcept;

    std::size_t component_count() const;
    /// Number of indexed points for component i.
    std::size_t size(std::size_t component) const;
    bool uses_tree(std::size_t component) const;
    bool active(std::size_t component) const;

    /// Mean distance to the k nearest indexed points of `component` other than `self_id`.
    /// Fewer than k neighbors: mean over all of them. None: +infinity.
    double query(std::size_t component, std::span<const double> point, std::int64_t self_id, std::size_t k) const;

    const BehaviorComponentSpec& spec(std::size_t component) const;

private:
    struct Component;
    std::vector<std::unique_ptr<Component>> components_;
};

/// Per-component novelty of `query` (undefined where its behavior is undefined or the component is masked).
std::vector<std::optional<double>> knn_novelty(const Individual& query, const NoveltyQueryIndex& index, std::size_t k);

/// Strict ordering used wherever the most novel individual is picked:
/// larger novelty first (+inf above every finite value), then lower eval id.
bool more_novel(double nov_a, std::int64_t id_a, double nov_b, std::int64_t id_b);

} // namespace qdgrasp::novelty
