#include "qdgrasp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace qdgrasp::metrics {

std::size_t cell_count(const BehaviorComponentSpec& spec, std::size_t resolution)
{
    std::size_t n = 1;
    for (std::size_t j = 0; j < spec.dim; ++j)
        n *= resolution;
    return n;
}

std::size_t cell_index(std::span<const double> point, const BehaviorComponentSpec& spec, std::size_t resolution)
{
    if (resolution == 0)
        throw std::invalid_argument("coverage resolution must be at least 1");
    if (point.size() != spec.dim)
        throw std::invalid_argument("behavior point dimension does not match its component");
    std::size_t cell = 0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
        const double v = normalize_coordinate(point[j], spec.bounds[j]);
        auto bin = static_cast<std::size_t>(std::floor(v * static_cast<double>(resolution)));
        bin = std::min(bin, resolution - 1);
        cell = cell * resolution + bin;
    }
    return cell;
}

double coverage_upto(std::span<const Individual> repertoire, const BehaviorComponentSpec& spec, std::size_t resolution,
                     int upto_generation)
{
    const std::size_t total = cell_count(spec, resolution);
    std::unordered_set<std::size_t> filled;
    for (const auto& ind : repertoire) {
        if (!ind.success || ind.generation_born > upto_generation)
            continue;
        if (spec.index >= ind.behavior.size() || !ind.behavior.defined(spec.index))
            continue;
        filled.insert(cell_index(*ind.behavior.components[spec.index], spec, resolution));
    }
    return static_cast<double>(filled.size()) / static_cast<double>(total);
}

double coverage(std::span<const Individual> repertoire, const BehaviorComponentSpec& spec, std::size_t resolution)
{
    if (resolution == 0)
        throw std::invalid_argument("coverage resolution must be at least 1");
    return coverage_upto(repertoire, spec, resolution, std::numeric_limits<int>::max());
}

Ratio sample_efficiency(const EvaluationBudgetLedger& ledger, std::optional<std::size_t> upto_generation)
{
    const auto& entries = ledger.per_generation();
    const std::size_t end = upto_generation ? std::min(*upto_generation + 1, entries.size()) : entries.size();
    std::int64_t evals = 0, succ = 0;
    for (std::size_t g = 0; g < end; ++g) {
        evals += entries[g].evaluations;
        succ += entries[g].successes;
    }
    if (evals == 0)
        return {};
    return {static_cast<double>(succ) / static_cast<double>(evals), true};
}

std::optional<int> first_success_generation(const EvaluationBudgetLedger& ledger)
{
    const auto& entries = ledger.per_generation();
    for (std::size_t g = 0; g < entries.size(); ++g)
        if (entries[g].successes > 0)
            return static_cast<int>(g);
    return std::nullopt;
}

std::optional<int> first_success_generation(const RunHistory& history)
{
    return first_success_generation(history.ledger);
}

double successful_run_rate(std::span<const RunHistory> runs)
{
    if (runs.empty())
        throw std::invalid_argument("successful_run_rate needs at least one run");
    const auto hits = std::count_if(runs.begin(), runs.end(),
                                    [](const RunHistory& h) { return first_success_generation(h).has_value(); });
    return static_cast<double>(hits) / static_cast<double>(runs.size());
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q)
{
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

} // namespace

Summary summarize(std::vector<double> values)
{
    Summary s;
    s.n = values.size();
    if (values.empty())
        return s;
    std::sort(values.begin(), values.end());
    s.median = quantile_sorted(values, 0.5);
    s.q1 = quantile_sorted(values, 0.25);
    s.q3 = quantile_sorted(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

double rank_sum_p_value(std::span<const double> a, std::span<const double> b)
{
    const std::size_t n1 = a.size(), n2 = b.size();
    if (n1 == 0 || n2 == 0)
        throw std::invalid_argument("rank-sum test needs two non-empty samples");

    struct Obs {
        double v;
        bool first;
    };
    std::vector<Obs> all;
    all.reserve(n1 + n2);
    for (double v : a)
        all.push_back({v, true});
    for (double v : b)
        all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Obs& x, const Obs& y) { return x.v < y.v; });

    const std::size_t n = all.size();
    double r1 = 0.0;
    double tie_term = 0.0;
    bool ties = false;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].v == all[i].v)
            ++j;
        const double t = static_cast<double>(j - i);
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t m = i; m < j; ++m)
            if (all[m].first)
                r1 += avg_rank;
        if (j - i > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        i = j;
    }
    const double u1 = r1 - static_cast<double>(n1 * (n1 + 1)) / 2.0;
    const double mean_u = static_cast<double>(n1 * n2) / 2.0;

    if (!ties && n1 <= 50 && n2 <= 50) {
        // counts[u] for the number of ways to reach statistic u with the first sample of size i
        // among i + j observations, built up by the standard recurrence.
        const std::size_t max_u = n1 * n2;
        std::vector<std::vector<double>> prev(n1 + 1, std::vector<double>(max_u + 1, 0.0));
        for (std::size_t i = 0; i <= n1; ++i)
            prev[i][0] = 1.0; // j = 0
        for (std::size_t j = 1; j <= n2; ++j) {
            std::vector<std::vector<double>> cur(n1 + 1, std::vector<double>(max_u + 1, 0.0));
            cur[0][0] = 1.0;
            for (std::size_t i = 1; i <= n1; ++i)
                for (std::size_t u = 0; u <= i * j; ++u)
                    cur[i][u] = prev[i][u] + (u >= j ? cur[i - 1][u - j] : 0.0);
            prev = std::move(cur);
        }
        const auto& dist = prev[n1];
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        const double u_small = std::min(u1, static_cast<double>(max_u) - u1);
        double tail = 0.0;
        for (std::size_t u = 0; u <= max_u && static_cast<double>(u) <= u_small + 1e-9; ++u)
            tail += dist[u];
        return std::min(1.0, 2.0 * tail / total);
    }

    const double nn = static_cast<double>(n);
    const double var_u =
        static_cast<double>(n1 * n2) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var_u <= 0.0)
        return 1.0;
    const double diff = std::max(0.0, std::abs(u1 - mean_u) - 0.5);
    const double z = diff / std::sqrt(var_u);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

} // namespace qdgrasp::metrics
