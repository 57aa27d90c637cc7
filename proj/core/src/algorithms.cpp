#include "qdgrasp/algorithms.hpp"

#include "qdgrasp/metrics.hpp"
#include "qdgrasp/novelty.hpp"
#include "qdgrasp/parallel.hpp"
#include "qdgrasp/selection.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <optional>
#include <unordered_set>

namespace qdgrasp::algorithms {

std::string to_string(AlgorithmKind kind)
{
    switch (kind) {
    case AlgorithmKind::nsmbs:
        return "nsmbs";
    case AlgorithmKind::nsmbs_no_bd2:
        return "nsmbs_no_bd2";
    case AlgorithmKind::nsmbs_no_bd3:
        return "nsmbs_no_bd3";
    case AlgorithmKind::ns_concat:
        return "ns_concat";
    case AlgorithmKind::map_elites:
        return "map_elites";
    case AlgorithmKind::random:
        return "random";
    }
    return "unknown";
}

const std::vector<AlgorithmKind>& all_kinds()
{
    static const std::vector<AlgorithmKind> kinds{AlgorithmKind::nsmbs,     AlgorithmKind::nsmbs_no_bd2,
                                                  AlgorithmKind::nsmbs_no_bd3, AlgorithmKind::ns_concat,
                                                  AlgorithmKind::map_elites, AlgorithmKind::random};
    return kinds;
}

AlgorithmKind kind_from_string(const std::string& name)
{
    for (AlgorithmKind k : all_kinds())
        if (to_string(k) == name)
            return k;
    throw ConfigError("unknown algorithm kind: " + name);
}

void validate(const AlgorithmConfig& cfg)
{
    if (cfg.mu < 1)
        throw ConfigError("algorithm.mu must be at least 1");
    if (cfg.lambda < 1)
        throw ConfigError("algorithm.lambda must be at least 1");
    if (cfg.generations < 1 && cfg.kind != AlgorithmKind::random)
        throw ConfigError("algorithm.generations must be at least 1");
    if (cfg.k < 1)
        throw ConfigError("algorithm.k must be at least 1");
    if (cfg.kind == AlgorithmKind::map_elites && cfg.cvt_cells < 1)
        throw ConfigError("algorithm.cvt_cells must be at least 1");
    variation::validate(cfg.variation);
}

std::vector<bool> active_components(AlgorithmKind kind, std::size_t n_b)
{
    std::vector<bool> active(n_b, true);
    if (kind == AlgorithmKind::nsmbs_no_bd2 && n_b > 1)
        active[1] = false;
    if (kind == AlgorithmKind::nsmbs_no_bd3 && n_b > 2)
        active[2] = false;
    return active;
}

std::size_t concatenated_dim(const std::vector<BehaviorComponentSpec>& specs)
{
    std::size_t d = 0;
    for (const auto& s : specs)
        d += s.dim;
    return d;
}

BehaviorComponentSpec concatenated_spec(const std::vector<BehaviorComponentSpec>& specs)
{
    BehaviorComponentSpec out;
    out.index = 0;
    out.dim = concatenated_dim(specs);
    out.metric = Metric::euclidean;
    out.name = "concatenated";
    for (const auto& s : specs)
        out.bounds.insert(out.bounds.end(), s.bounds.begin(), s.bounds.end());
    return out;
}

BehaviorPoint concatenate(const BehaviorVector& behavior, const std::vector<BehaviorComponentSpec>& specs)
{
    BehaviorPoint p;
    p.reserve(concatenated_dim(specs));
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (behavior.defined(i))
            p.insert(p.end(), behavior.components[i]->begin(), behavior.components[i]->end());
        else
            p.insert(p.end(), specs[i].dim, 0.0);
    }
    return p;
}

std::vector<double> concatenate_normalized(const BehaviorVector& behavior,
                                           const std::vector<BehaviorComponentSpec>& specs)
{
    std::vector<double> p = concatenate(behavior, specs);
    std::size_t j = 0;
    for (const auto& s : specs)
        for (const auto& b : s.bounds) {
            p[j] = normalize_coordinate(p[j], b);
            ++j;
        }
    return p;
}

namespace {

// Evaluates batches, assigns eval ids, keeps the repertoire and the per-generation log.
class Recorder {
public:
    Recorder(const Environment& env, const RunOptions& options) : env_(env), options_(options)
    {
        const auto& specs = env.behavior_specs();
        if (options.coverage_component < specs.size())
            coverage_spec_ = specs[options.coverage_component];
    }

    std::vector<Individual> evaluate(const std::vector<Genome>& genomes, int generation)
    {
        std::vector<Evaluation> evals(genomes.size());
        try {
            parallel_for(genomes.size(), options_.parallel_evaluators,
                         [&](std::size_t i) { evals[i] = env_.evaluate(genomes[i]); });
        }
        catch (const std::exception& e) {
            abort(std::string("evaluation failed in generation ") + std::to_string(generation) + ": " + e.what());
        }

        std::vector<Individual> out(genomes.size());
        for (std::size_t i = 0; i < genomes.size(); ++i) {
            Individual& ind = out[i];
            ind.genome = genomes[i];
            ind.behavior = std::move(evals[i].behavior);
            ind.success = evals[i].success;
            ind.quality = evals[i].quality;
            ind.eval_id = next_id_++;
            ind.generation_born = generation;
            ++gen_evaluations_;
            if (ind.success) {
                ++gen_successes_;
                result_.repertoire.push_back(ind);
                if (coverage_spec_ && ind.behavior.defined(coverage_spec_->index))
                    filled_cells_.insert(metrics::cell_index(*ind.behavior.components[coverage_spec_->index],
                                                             *coverage_spec_, options_.coverage_resolution));
            }
        }
        return out;
    }

    void close_generation(int generation, std::size_t archive_size)
    {
        result_.history.ledger.record_generation(gen_evaluations_, gen_successes_);
        GenerationRecord rec;
        rec.generation = generation;
        rec.evaluations = gen_evaluations_;
        rec.successes = gen_successes_;
        rec.cumulative_evaluations = result_.history.ledger.total_evaluations();
        rec.cumulative_successes = result_.history.ledger.successful_evaluations();
        rec.sample_efficiency = rec.cumulative_evaluations > 0 ? static_cast<double>(rec.cumulative_successes) /
                                                                     static_cast<double>(rec.cumulative_evaluations)
                                                               : 0.0;
        rec.coverage = coverage_spec_ ? static_cast<double>(filled_cells_.size()) /
                                            static_cast<double>(metrics::cell_count(*coverage_spec_,
                                                                                    options_.coverage_resolution))
                                      : 0.0;
        rec.repertoire_size = static_cast<std::int64_t>(result_.repertoire.size());
        rec.archive_size = static_cast<std::int64_t>(archive_size);
        result_.history.generations.push_back(rec);
        gen_evaluations_ = 0;
        gen_successes_ = 0;
    }

    void trace(const std::vector<Individual>& survivors)
    {
        if (!options_.keep_selection_trace)
            return;
        std::vector<std::int64_t> ids;
        ids.reserve(survivors.size());
        for (const auto& s : survivors)
            ids.push_back(s.eval_id);
        result_.selection_trace.push_back(std::move(ids));
    }

    RunResult finish(std::vector<Individual> archive, std::vector<Individual> population)
    {
        result_.archive = std::move(archive);
        result_.population = std::move(population);
        return std::move(result_);
    }

    // Snapshot of the archive and population used if a later generation aborts.
    void checkpoint(const std::vector<Individual>& archive, const std::vector<Individual>& population)
    {
        archive_snapshot_ = &archive;
        population_snapshot_ = &population;
    }

private:
    [[noreturn]] void abort(const std::string& message)
    {
        // Evaluations of the failing batch are not counted; earlier generations are intact.
        gen_evaluations_ = 0;
        gen_successes_ = 0;
        RunResult partial = result_;
        partial.history.complete = false;
        if (archive_snapshot_)
            partial.archive = *archive_snapshot_;
        if (population_snapshot_)
            partial.population = *population_snapshot_;
        throw RunAborted(message, std::move(partial));
    }

    const Environment& env_;
    RunOptions options_;
    std::optional<BehaviorComponentSpec> coverage_spec_;
    std::unordered_set<std::size_t> filled_cells_;
    RunResult result_;
    std::int64_t next_id_ = 0;
    std::int64_t gen_evaluations_ = 0;
    std::int64_t gen_successes_ = 0;
    const std::vector<Individual>* archive_snapshot_ = nullptr;
    const std::vector<Individual>* population_snapshot_ = nullptr;
};

std::vector<Genome> breed(const std::vector<Individual>& pop, const AlgorithmConfig& cfg, const Bounds& bounds,
                          RngStream& rng)
{
    const auto idx = variation::select_parent_indices(pop.size(), cfg.lambda, rng);
    std::vector<Genome> parents;
    parents.reserve(idx.size());
    for (std::size_t i : idx)
        parents.push_back(pop[i].genome);
    return variation::operate(parents, cfg.variation, bounds, rng);
}

// Appends `count` offspring drawn uniformly without replacement (partial Fisher-Yates).
void grow_archive(std::vector<Individual>& archive, const std::vector<Individual>& offspring, std::size_t count,
                  RngStream& rng)
{
    std::vector<std::size_t> order(offspring.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(count, order.size());
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.index(order.size() - i);
        std::swap(order[i], order[j]);
        archive.push_back(offspring[order[i]]);
    }
}

struct Streams {
    RngStream init, variation, selection, archive;
    explicit Streams(const RngStream& root)
        : init(root.derive("init")), variation(root.derive("variation")), selection(root.derive("selection")),
          archive(root.derive("archive"))
    {
    }
};

template <typename Gather>
std::vector<Individual> gather(const std::vector<Individual>& from, const Gather& indices)
{
    std::vector<Individual> out;
    out.reserve(indices.size());
    for (std::size_t i : indices)
        out.push_back(from[i]);
    return out;
}

} // namespace

RunResult run_nsmbs(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng,
                    const RunOptions& options)
{
    validate(cfg);
    const auto& specs = env.behavior_specs();
    const auto& bounds = env.genome_bounds();
    const std::size_t n_b = specs.size();
    const auto active = active_components(cfg.kind, n_b);
    Streams streams(rng);
    Recorder rec(env, options);

    std::vector<Individual> archive;
    std::vector<Individual> pop;
    rec.checkpoint(archive, pop);
    pop = rec.evaluate(generate_random_population(cfg.mu, bounds, streams.init), 0);
    rec.close_generation(0, archive.size());

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        const int g = static_cast<int>(gen);
        std::vector<Individual> offspring = rec.evaluate(breed(pop, cfg, bounds, streams.variation), g);

        const auto reference = novelty::make_reference_set({pop, offspring, archive});
        const novelty::NoveltyQueryIndex index(reference, specs, active);
        for (auto& ind : pop)
            ind.novelty = novelty::knn_novelty(ind, index, cfg.k);
        for (auto& ind : offspring)
            ind.novelty = novelty::knn_novelty(ind, index, cfg.k);

        grow_archive(archive, offspring, cfg.archive_add_count, streams.archive);

        std::vector<Individual> candidates = std::move(pop);
        candidates.insert(candidates.end(), std::make_move_iterator(offspring.begin()),
                          std::make_move_iterator(offspring.end()));
        pop = gather(candidates, selection::multi_bc_select_indices(candidates, cfg.mu, n_b, streams.selection));
        rec.trace(pop);
        rec.close_generation(g, archive.size());
    }
    return rec.finish(std::move(archive), std::move(pop));
}

RunResult run_ns_concat(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng,
                        const RunOptions& options)
{
    validate(cfg);
    const auto& specs = env.behavior_specs();
    const auto& bounds = env.genome_bounds();
    const std::vector<BehaviorComponentSpec> concat_specs{concatenated_spec(specs)};
    Streams streams(rng);
    Recorder rec(env, options);

    std::vector<Individual> archive;
    std::vector<Individual> pop;
    rec.checkpoint(archive, pop);
    pop = rec.evaluate(generate_random_population(cfg.mu, bounds, streams.init), 0);
    rec.close_generation(0, archive.size());

    auto as_concat = [&](const Individual& ind) {
        BehaviorVector v;
        v.components.emplace_back(concatenate(ind.behavior, specs));
        return v;
    };

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        const int g = static_cast<int>(gen);
        std::vector<Individual> offspring = rec.evaluate(breed(pop, cfg, bounds, streams.variation), g);

        // Concatenated descriptors, in reference-set order with repeated eval ids dropped.
        std::vector<BehaviorVector> points;
        std::vector<std::int64_t> ids;
        std::unordered_set<std::int64_t> seen;
        for (const auto* group : {&pop, &offspring, &archive})
            for (const auto& ind : *group)
                if (seen.insert(ind.eval_id).second) {
                    points.push_back(as_concat(ind));
                    ids.push_back(ind.eval_id);
                }
        std::vector<novelty::ReferencePoint> reference(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            reference[i] = {ids[i], &points[i]};
        const novelty::NoveltyQueryIndex index(reference, concat_specs);

        auto score = [&](Individual& ind) {
            const BehaviorPoint p = concatenate(ind.behavior, specs);
            ind.novelty = {index.query(0, p, ind.eval_id, cfg.k)};
        };
        for (auto& ind : pop)
            score(ind);
        for (auto& ind : offspring)
            score(ind);

        grow_archive(archive, offspring, cfg.archive_add_count, streams.archive);

        std::vector<Individual> candidates = std::move(pop);
        candidates.insert(candidates.end(), std::make_move_iterator(offspring.begin()),
                          std::make_move_iterator(offspring.end()));
        pop = gather(candidates, selection::ns_select_indices(candidates, cfg.mu));
        rec.trace(pop);
        rec.close_generation(g, archive.size());
    }
    return rec.finish(std::move(archive), std::move(pop));
}

RunResult run_map_elites(const AlgorithmConfig& cfg, const Environment& env, const cvt::CvtGrid& grid,
                         const RngStream& rng, const RunOptions& options)
{
    validate(cfg);
    const auto& specs = env.behavior_specs();
    const auto& bounds = env.genome_bounds();
    if (grid.dim != concatenated_dim(specs))
        throw ConfigError("CVT dimension does not match the concatenated behavior space");
    if (grid.n_cells == 0)
        throw ConfigError("CVT grid has no cells");
    Streams streams(rng);
    Recorder rec(env, options);

    std::vector<std::optional<Individual>> cells(grid.n_cells);
    std::vector<std::size_t> occupied;
    std::vector<Individual> elites_view;
    std::vector<Individual> population_view;
    rec.checkpoint(elites_view, population_view);

    auto place = [&](Individual&& ind) {
        const std::size_t c = cvt::nearest_cell(concatenate_normalized(ind.behavior, specs), grid);
        auto& slot = cells[c];
        if (!slot) {
            occupied.insert(std::lower_bound(occupied.begin(), occupied.end(), c), c);
            slot = std::move(ind);
        }
        else if (ind.quality > slot->quality) {
            slot = std::move(ind);
        }
    };
    auto refresh_view = [&] {
        elites_view.clear();
        for (std::size_t c : occupied)
            elites_view.push_back(*cells[c]);
    };

    for (auto& ind : rec.evaluate(generate_random_population(cfg.mu, bounds, streams.init), 0))
        place(std::move(ind));
    rec.close_generation(0, occupied.size());

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        const int g = static_cast<int>(gen);
        std::vector<Genome> parents;
        parents.reserve(cfg.lambda);
        for (std::size_t i = 0; i < cfg.lambda; ++i)
            parents.push_back(cells[occupied[streams.variation.index(occupied.size())]]->genome);
        const auto children = variation::operate(parents, cfg.variation, bounds, streams.variation);
        refresh_view();
        for (auto& ind : rec.evaluate(children, g))
            place(std::move(ind));
        rec.close_generation(g, occupied.size());
    }
    refresh_view();
    std::vector<Individual> elites = elites_view;
    return rec.finish(std::move(elites), {});
}

RunResult run_random(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng,
                     const RunOptions& options)
{
    validate(cfg);
    const auto& bounds = env.genome_bounds();
    Streams streams(rng);
    Recorder rec(env, options);

    rec.evaluate(generate_random_population(cfg.mu, bounds, streams.init), 0);
    rec.close_generation(0, 0);
    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        const int g = static_cast<int>(gen);
        rec.evaluate(generate_random_population(cfg.lambda, bounds, streams.init), g);
        rec.close_generation(g, 0);
    }
    return rec.finish({}, {});
}

RunResult run(const AlgorithmConfig& cfg, const Environment& env, const RngStream& rng, const RunOptions& options,
              const cvt::CvtGrid* grid)
{
    switch (cfg.kind) {
    case AlgorithmKind::nsmbs:
    case AlgorithmKind::nsmbs_no_bd2:
    case AlgorithmKind::nsmbs_no_bd3:
        return run_nsmbs(cfg, env, rng, options);
    case AlgorithmKind::ns_concat:
        return run_ns_concat(cfg, env, rng, options);
    case AlgorithmKind::map_elites:
        if (!grid)
            throw ConfigError("MAP-Elites needs a CVT grid");
        return run_map_elites(cfg, env, *grid, rng, options);
    case AlgorithmKind::random:
        return run_random(cfg, env, rng, options);
    }
    throw ConfigError("unknown algorithm kind");
}

} // namespace qdgrasp::algorithms
