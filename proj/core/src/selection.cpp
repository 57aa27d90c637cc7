#include "qdgrasp/selection.hpp"

#include "qdgrasp/novelty.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qdgrasp::selection {

namespace {

bool eligible(const Individual& ind, std::size_t component)
{
    return component < ind.novelty.size() && ind.novelty[component].has_value();
}

template <typename IndexFn>
std::vector<Individual> gather(std::span<const Individual> candidates, IndexFn&& picks)
{
    std::vector<Individual> out;
    out.reserve(picks.size());
    for (std::size_t i : picks)
        out.push_back(candidates[i]);
    return out;
}

} // namespace

std::vector<std::size_t> multi_bc_select_indices(std::span<const Individual> candidates, std::size_t mu,
                                                 std::size_t n_b, RngStream& rng)
{
    if (candidates.empty())
        throw std::logic_error("multi_bc_select: empty candidate list");

    std::vector<std::size_t> pool(candidates.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> chosen;
    const std::size_t target = std::min(mu, candidates.size());
    chosen.reserve(target);

    std::vector<std::size_t> eligible_components;
    while (chosen.size() < target) {
        eligible_components.clear();
        for (std::size_t c = 0; c < n_b; ++c) {
            if (std::any_of(pool.begin(), pool.end(), [&](std::size_t i) { return eligible(candidates[i], c); }))
                eligible_components.push_back(c);
        }

        if (eligible_components.empty()) {
            while (chosen.size() < target) {
                const std::size_t at = rng.index(pool.size());
                chosen.push_back(pool[at]);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
            }
            break;
        }

        const std::size_t component = eligible_components[rng.index(eligible_components.size())];
        std::size_t best = pool.size();
        for (std::size_t p = 0; p < pool.size(); ++p) {
            const Individual& ind = candidates[pool[p]];
            if (!eligible(ind, component))
                continue;
            if (best == pool.size())
                best = p;
            else {
                const Individual& cur = candidates[pool[best]];
                if (novelty::more_novel(*ind.novelty[component], ind.eval_id, *cur.novelty[component], cur.eval_id))
                    best = p;
            }
        }
        chosen.push_back(pool[best]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return chosen;
}

std::vector<Individual> multi_bc_select(std::span<const Individual> candidates, std::size_t mu, std::size_t n_b,
                                        RngStream& rng)
{
    return gather(candidates, multi_bc_select_indices(candidates, mu, n_b, rng));
}

std::vector<std::size_t> ns_select_indices(std::span<const Individual> candidates, std::size_t mu)
{
    auto score = [&](std::size_t i) {
        const auto& nov = candidates[i].novelty;
        return !nov.empty() && nov[0] ? *nov[0] : -std::numeric_limits<double>::infinity();
    };
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return novelty::more_novel(score(a), candidates[a].eval_id, score(b), candidates[b].eval_id);
    });
    order.resize(std::min(mu, order.size()));
    return order;
}

std::vector<Individual> ns_select(std::span<const Individual> candidates, std::size_t mu)
{
    return gather(candidates, ns_select_indices(candidates, mu));
}

} // namespace qdgrasp::selection
