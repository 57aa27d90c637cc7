#include "qdgrasp/campaign.hpp"

#include "qdgrasp/records.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace qdgrasp::campaign {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Reads known keys from one JSON object and rejects everything else.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j.is_object())
            throw ConfigError(where_ + " must be an object");
    }

    template <typename T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return;
        try {
            out = it->template get<T>();
        }
        catch (const json::exception&) {
            throw ConfigError(where_ + "." + key + " has the wrong type");
        }
    }

    void read(const char* key, Interval& out)
    {
        std::vector<double> v{out.lo, out.hi};
        read(key, v);
        if (v.size() != 2)
            throw ConfigError(where_ + "." + key + " must be [lo, hi]");
        out = {v[0], v[1]};
    }

    void read(const char* key, grasp::Vec2& out)
    {
        std::vector<double> v{out.x, out.y};
        read(key, v);
        if (v.size() != 2)
            throw ConfigError(where_ + "." + key + " must be [x, y]");
        out = {v[0], v[1]};
    }

    const json* child(const char* key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("unknown key " + where_ + "." + it.key());
    }

    const std::string& where() const { return where_; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_environment(const json& j, grasp::EnvConfig& env)
{
    ObjectReader r(j, "environment");
    r.read("n_dof", env.n_dof);
    r.read("link_lengths", env.link_lengths);
    r.read("T", env.T);
    r.read("table_height", env.table_height);
    r.read("table_extent", env.table_extent);
    r.read("floor_height", env.floor_height);
    r.read("initial_joints", env.initial_joints);
    r.read("joint_limit", env.joint_limit);
    if (const json* o = r.child("object")) {
        ObjectReader ro(*o, "environment.object");
        std::string shape = "disc";
        ro.read("shape", shape);
        if (shape != "disc")
            throw ConfigError("environment.object.shape must be \"disc\"");
        ro.read("radius", env.object.radius);
        ro.read("mass", env.object.mass);
        ro.read("position", env.object.position);
        ro.finish();
    }
    if (const json* g = r.child("gripper")) {
        ObjectReader rg(*g, "environment.gripper");
        rg.read("finger_length", env.gripper.finger_length);
        rg.read("max_aperture", env.gripper.max_aperture);
        rg.read("close_speed", env.gripper.close_speed);
        rg.finish();
    }
    if (const json* t = r.child("tolerances")) {
        ObjectReader rt(*t, "environment.tolerances");
        rt.read("contact_eps", env.tolerances.contact_eps);
        rt.read("penetration_max", env.tolerances.penetration_max);
        rt.read("lift_height_min", env.tolerances.lift_height_min);
        rt.read("touch_window_steps", env.tolerances.touch_window_steps);
        rt.read("min_bearing_difference_deg", env.tolerances.min_bearing_difference_deg);
        rt.finish();
    }
    r.finish();
}

void read_algorithm(const json& j, algorithms::AlgorithmConfig& a)
{
    ObjectReader r(j, "algorithm");
    std::string kind = algorithms::to_string(a.kind);
    r.read("kind", kind);
    a.kind = algorithms::kind_from_string(kind);
    r.read("mu", a.mu);
    r.read("lambda", a.lambda);
    r.read("generations", a.generations);
    r.read("k", a.k);
    r.read("archive_add_count", a.archive_add_count);
    r.read("cvt_cells", a.cvt_cells);
    r.finish();
}

void read_variation(const json& j, variation::VariationConfig& v)
{
    ObjectReader r(j, "variation");
    r.read("sigma", v.sigma);
    if (const json* p = r.child("p_mut")) {
        if (p->is_null())
            v.p_mut = -1.0;
        else if (p->is_number())
            v.p_mut = p->get<double>();
        else
            throw ConfigError("variation.p_mut must be a number or null");
    }
    r.read("p_cx", v.p_cx);
    std::string order =
        v.order == variation::OperatorOrder::crossover_then_mutation ? "crossover_then_mutation" : "mutation_then_crossover";
    r.read("order", order);
    if (order == "crossover_then_mutation")
        v.order = variation::OperatorOrder::crossover_then_mutation;
    else if (order == "mutation_then_crossover")
        v.order = variation::OperatorOrder::mutation_then_crossover;
    else
        throw ConfigError("variation.order must be crossover_then_mutation or mutation_then_crossover");
    r.finish();
}

json environment_json(const grasp::EnvConfig& e)
{
    return json{
        {"n_dof", e.n_dof},
        {"link_lengths", e.link_lengths},
        {"T", e.T},
        {"table_height", e.table_height},
        {"table_extent", {e.table_extent.lo, e.table_extent.hi}},
        {"floor_height", e.floor_height},
        {"initial_joints", e.initial_joints},
        {"joint_limit", {e.joint_limit.lo, e.joint_limit.hi}},
        {"object",
         {{"shape", "disc"},
          {"radius", e.object.radius},
          {"mass", e.object.mass},
          {"position", {e.object.position.x, e.object.position.y}}}},
        {"gripper",
         {{"finger_length", e.gripper.finger_length},
          {"max_aperture", e.gripper.max_aperture},
          {"close_speed", e.gripper.close_speed}}},
        {"tolerances",
         {{"contact_eps", e.tolerances.contact_eps},
          {"penetration_max", e.tolerances.penetration_max},
          {"lift_height_min", e.tolerances.lift_height_min},
          {"touch_window_steps", e.tolerances.touch_window_steps},
          {"min_bearing_difference_deg", e.tolerances.min_bearing_difference_deg}}},
    };
}

json config_json(const RunConfig& c)
{
    const auto& a = c.algorithm;
    const auto& v = a.variation;
    return json{
        {"seed", c.seed},
        {"replicates", c.replicates},
        {"output_dir", c.output_dir.generic_string()},
        {"parallel_evaluators", c.parallel_evaluators},
        {"coverage_resolution", c.coverage_resolution},
        {"cvt_cache_dir", c.cvt_cache_dir.generic_string()},
        {"algorithm",
         {{"kind", algorithms::to_string(a.kind)},
          {"mu", a.mu},
          {"lambda", a.lambda},
          {"generations", a.generations},
          {"k", a.k},
          {"archive_add_count", a.archive_add_count},
          {"cvt_cells", a.cvt_cells}}},
        {"variation",
         {{"sigma", v.sigma},
          {"p_mut", v.p_mut < 0.0 ? json(nullptr) : json(v.p_mut)},
          {"p_cx", v.p_cx},
          {"order", v.order == variation::OperatorOrder::crossover_then_mutation ? "crossover_then_mutation"
                                                                                 : "mutation_then_crossover"}}},
        {"environment", environment_json(c.environment)},
    };
}

RunConfig config_from_json(const json& j)
{
    RunConfig cfg;
    ObjectReader r(j, "config");
    r.read("seed", cfg.seed);
    r.read("replicates", cfg.replicates);
    std::string out = cfg.output_dir.string();
    r.read("output_dir", out);
    cfg.output_dir = out;
    r.read("parallel_evaluators", cfg.parallel_evaluators);
    r.read("coverage_resolution", cfg.coverage_resolution);
    std::string cache = cfg.cvt_cache_dir.string();
    r.read("cvt_cache_dir", cache);
    cfg.cvt_cache_dir = cache;
    if (const json* a = r.child("algorithm"))
        read_algorithm(*a, cfg.algorithm);
    if (const json* v = r.child("variation"))
        read_variation(*v, cfg.algorithm.variation);
    if (const json* e = r.child("environment"))
        read_environment(*e, cfg.environment);
    r.finish();
    return cfg;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json load_manifest(const fs::path& dir)
{
    const fs::path path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in)
        throw ConfigError("no manifest.json in " + dir.string());
    try {
        return json::parse(in);
    }
    catch (const json::exception& e) {
        throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
    }
}

cvt::CvtGrid make_grid(const RunConfig& cfg, std::size_t dim)
{
    cvt::BuildOptions opts;
    opts.workers = cfg.parallel_evaluators;
    if (!cfg.cvt_cache_dir.empty()) {
        fs::create_directories(cfg.cvt_cache_dir);
        return cvt::load_or_build(cfg.cvt_cache_dir, cfg.algorithm.cvt_cells, dim, cfg.seed, opts);
    }
    RngStream rng(cfg.seed, "cvt");
    return cvt::build_cvt(cfg.algorithm.cvt_cells, dim, rng, opts);
}

// Coverage after each generation, from the successful individuals' birth generations.
std::vector<double> coverage_series(const std::vector<Individual>& repertoire, const BehaviorComponentSpec& spec,
                                    std::size_t resolution, std::size_t generations)
{
    std::vector<std::vector<std::size_t>> by_gen(generations);
    for (const auto& ind : repertoire) {
        if (!ind.success || !ind.behavior.defined(spec.index))
            continue;
        const auto g = static_cast<std::size_t>(std::max(0, ind.generation_born));
        if (g < generations)
            by_gen[g].push_back(metrics::cell_index(*ind.behavior.components[spec.index], spec, resolution));
    }
    const double total = static_cast<double>(metrics::cell_count(spec, resolution));
    std::unordered_set<std::size_t> filled;
    std::vector<double> out(generations);
    for (std::size_t g = 0; g < generations; ++g) {
        filled.insert(by_gen[g].begin(), by_gen[g].end());
        out[g] = static_cast<double>(filled.size()) / total;
    }
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

void validate(const RunConfig& cfg)
{
    algorithms::validate(cfg.algorithm);
    grasp::validate(cfg.environment);
    if (cfg.replicates < 1)
        throw ConfigError("replicates must be at least 1");
    if (cfg.parallel_evaluators < 1)
        throw ConfigError("parallel_evaluators must be at least 1");
    if (cfg.coverage_resolution < 1)
        throw ConfigError("coverage_resolution must be at least 1");
    if (cfg.output_dir.empty())
        throw ConfigError("output_dir must be set");
}

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    }
    catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg = config_from_json(j);
    validate(cfg);
    return cfg;
}

RunConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

std::string environment_to_json(const grasp::EnvConfig& env) { return environment_json(env).dump(); }

std::string environment_digest(const grasp::EnvConfig& env) { return records::sha256_hex(environment_to_json(env)); }

bool CampaignResult::complete() const
{
    return std::all_of(runs.begin(), runs.end(), [](const ReplicateOutcome& r) { return r.complete; });
}

fs::path run_directory(const fs::path& output_dir, std::size_t replicate)
{
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", replicate);
    return output_dir / name;
}

CampaignResult run_campaign(const RunConfig& cfg, std::ostream* log)
{
    validate(cfg);
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir))
        throw std::runtime_error("cannot create output directory " + cfg.output_dir.string());

    const grasp::GraspEnvironment env(cfg.environment);
    const std::string kind = algorithms::to_string(cfg.algorithm.kind);
    std::optional<cvt::CvtGrid> grid;
    if (cfg.algorithm.kind == algorithms::AlgorithmKind::map_elites)
        grid = make_grid(cfg, algorithms::concatenated_dim(env.behavior_specs()));

    algorithms::RunOptions options;
    options.parallel_evaluators = cfg.parallel_evaluators;
    options.coverage_resolution = cfg.coverage_resolution;

    CampaignResult result;
    std::map<std::string, std::string> digests;
    json runs = json::array();
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        ReplicateOutcome outcome;
        outcome.replicate = r;
        outcome.seed = cfg.seed + r;
        outcome.directory = run_directory(cfg.output_dir, r);
        fs::create_directories(outcome.directory);

        algorithms::RunResult run;
        try {
            run = algorithms::run(cfg.algorithm, env, RngStream(outcome.seed, "run"), options, grid ? &*grid : nullptr);
        }
        catch (const algorithms::RunAborted& e) {
            run = e.partial();
            outcome.complete = false;
            outcome.error = e.what();
        }

        const std::string rel = outcome.directory.filename().generic_string();
        const std::pair<const char*, const std::vector<Individual>*> sets[] = {{"repertoire.jsonl", &run.repertoire},
                                                                               {"archive.jsonl", &run.archive}};
        for (const auto& [name, inds] : sets) {
            const fs::path p = outcome.directory / name;
            records::write_individuals(p, *inds, kind);
            digests[rel + "/" + name] = records::sha256_file(p);
        }
        const fs::path hist = outcome.directory / "history.jsonl";
        records::write_history(hist, run.history);
        digests[rel + "/history.jsonl"] = records::sha256_file(hist);

        runs.push_back(json{{"replicate", r},
                            {"seed", outcome.seed},
                            {"directory", rel},
                            {"complete", outcome.complete},
                            {"error", outcome.complete ? json(nullptr) : json(outcome.error)},
                            {"evaluations", run.history.ledger.total_evaluations()},
                            {"successes", run.history.ledger.successful_evaluations()}});
        if (log) {
            *log << kind << " run " << r << " seed " << outcome.seed << ": "
                 << run.history.ledger.total_evaluations() << " evaluations, "
                 << run.history.ledger.successful_evaluations() << " successes"
                 << (outcome.complete ? "" : " (aborted: " + outcome.error + ")") << '\n';
        }
        result.runs.push_back(std::move(outcome));
    }

    const json manifest{{"schema", "qdgrasp.manifest"},
                        {"version", records::schema_version},
                        {"algorithm", kind},
                        {"environment_digest", environment_digest(cfg.environment)},
                        {"complete", result.complete()},
                        {"config", config_json(cfg)},
                        {"runs", runs},
                        {"files", digests}};
    result.manifest = cfg.output_dir / "manifest.json";
    std::ofstream out(result.manifest, std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out)
        throw std::runtime_error("cannot write " + result.manifest.string());
    return result;
}

std::vector<std::string> verify_manifest(const fs::path& campaign_dir)
{
    const json manifest = load_manifest(campaign_dir);
    std::vector<std::string> bad;
    for (auto it = manifest.at("files").begin(); it != manifest.at("files").end(); ++it) {
        const fs::path p = campaign_dir / it.key();
        if (!fs::exists(p) || records::sha256_file(p) != it.value().get<std::string>())
            bad.push_back(it.key());
    }
    return bad;
}

CampaignMetrics load_campaign_metrics(const fs::path& campaign_dir, std::size_t coverage_resolution,
                                      std::size_t coverage_component)
{
    const json manifest = load_manifest(campaign_dir);
    const RunConfig cfg = config_from_json(manifest.at("config"));
    const auto specs = grasp::behavior_specs(cfg.environment);
    if (coverage_component >= specs.size())
        throw ConfigError("coverage component out of range");

    CampaignMetrics cm;
    cm.directory = campaign_dir;
    cm.algorithm = manifest.at("algorithm").get<std::string>();
    cm.environment_digest = manifest.at("environment_digest").get<std::string>();
    for (const auto& run : manifest.at("runs")) {
        const fs::path dir = campaign_dir / run.at("directory").get<std::string>();
        RunHistory h = records::read_history(dir / "history.jsonl");
        const auto repertoire = records::read_individuals(dir / "repertoire.jsonl");
        RunMetrics m;
        m.replicate = run.at("replicate").get<std::size_t>();
        m.complete = run.at("complete").get<bool>() && h.complete;
        m.first_success_generation = metrics::first_success_generation(h);
        m.sample_efficiency = metrics::sample_efficiency(h.ledger).value;
        m.coverage = metrics::coverage(repertoire, specs[coverage_component], coverage_resolution);
        m.repertoire_size = repertoire.size();
        m.evaluations = h.ledger.total_evaluations();
        cm.runs.push_back(m);
        cm.histories.push_back(std::move(h));
    }
    return cm;
}

Comparison compare(const std::vector<fs::path>& campaign_dirs, std::size_t coverage_resolution,
                   std::size_t coverage_component)
{
    if (campaign_dirs.size() < 2)
        throw ConfigError("compare needs at least two campaign directories");
    Comparison cmp;
    for (const auto& dir : campaign_dirs)
        cmp.campaigns.push_back(load_campaign_metrics(dir, coverage_resolution, coverage_component));
    const std::string& digest = cmp.campaigns.front().environment_digest;
    for (const auto& c : cmp.campaigns)
        if (c.environment_digest != digest)
            throw ConfigError("incompatible environments: " + cmp.campaigns.front().directory.string() + " and " +
                              c.directory.string() + " were run with different environment configs");

    std::map<std::string, int> label_count;
    for (const auto& c : cmp.campaigns)
        ++label_count[c.algorithm];
    std::vector<std::vector<double>> eff(cmp.campaigns.size()), cov(cmp.campaigns.size());
    for (std::size_t i = 0; i < cmp.campaigns.size(); ++i) {
        const auto& c = cmp.campaigns[i];
        AlgorithmRow row;
        row.label = label_count[c.algorithm] > 1 ? c.algorithm + "@" + c.directory.filename().string() : c.algorithm;
        row.directory = c.directory;
        row.runs = c.runs.size();
        row.successful_run_rate = c.histories.empty() ? 0.0 : metrics::successful_run_rate(c.histories);
        std::vector<double> fs_values, sizes;
        for (const auto& m : c.runs) {
            if (m.first_success_generation)
                fs_values.push_back(*m.first_success_generation);
            eff[i].push_back(m.sample_efficiency);
            cov[i].push_back(m.coverage);
            sizes.push_back(static_cast<double>(m.repertoire_size));
        }
        row.first_success = metrics::summarize(fs_values);
        row.efficiency = metrics::summarize(eff[i]);
        row.coverage = metrics::summarize(cov[i]);
        row.repertoire_size = metrics::summarize(sizes);
        cmp.rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < cmp.rows.size(); ++i)
        for (std::size_t j = i + 1; j < cmp.rows.size(); ++j) {
            PairwiseTest t;
            t.a = cmp.rows[i].label;
            t.b = cmp.rows[j].label;
            if (!eff[i].empty() && !eff[j].empty()) {
                t.p_efficiency = metrics::rank_sum_p_value(eff[i], eff[j]);
                t.p_coverage = metrics::rank_sum_p_value(cov[i], cov[j]);
            }
            cmp.tests.push_back(t);
        }
    return cmp;
}

void write_comparison(const Comparison& cmp, std::ostream& out)
{
    out << "algorithm,runs,successful_run_rate,"
           "first_success_median,first_success_q1,first_success_q3,first_success_mean,first_success_std,"
           "efficiency_median,efficiency_q1,efficiency_q3,efficiency_mean,efficiency_std,"
           "coverage_median,coverage_q1,coverage_q3,coverage_mean,coverage_std,"
           "repertoire_median,repertoire_mean,repertoire_std\n";
    auto summary = [&](const metrics::Summary& s) {
        if (s.n == 0)
            return std::string(",,,,");
        return fmt(s.median) + "," + fmt(s.q1) + "," + fmt(s.q3) + "," + fmt(s.mean) + "," + fmt(s.stddev);
    };
    for (const auto& r : cmp.rows) {
        out << r.label << ',' << r.runs << ',' << fmt(r.successful_run_rate) << ',' << summary(r.first_success) << ','
            << summary(r.efficiency) << ',' << summary(r.coverage) << ',' << fmt(r.repertoire_size.median) << ','
            << fmt(r.repertoire_size.mean) << ',' << fmt(r.repertoire_size.stddev) << '\n';
    }
    out << "\nalgorithm_a,algorithm_b,p_sample_efficiency,p_coverage\n";
    for (const auto& t : cmp.tests)
        out << t.a << ',' << t.b << ',' << fmt(t.p_efficiency) << ',' << fmt(t.p_coverage) << '\n';
}

void write_metrics_csv(const fs::path& campaign_dir, std::size_t coverage_resolution, std::ostream& out,
                       std::size_t coverage_component)
{
    const json manifest = load_manifest(campaign_dir);
    const RunConfig cfg = config_from_json(manifest.at("config"));
    const auto specs = grasp::behavior_specs(cfg.environment);
    if (coverage_component >= specs.size())
        throw ConfigError("coverage component out of range");
    const std::string algorithm = manifest.at("algorithm").get<std::string>();

    out << "algorithm,run,seed,generation,metric,value\n";
    for (const auto& run : manifest.at("runs")) {
        const fs::path dir = campaign_dir / run.at("directory").get<std::string>();
        const RunHistory h = records::read_history(dir / "history.jsonl");
        const auto repertoire = records::read_individuals(dir / "repertoire.jsonl");
        const auto& entries = h.ledger.per_generation();
        const auto cov = coverage_series(repertoire, specs[coverage_component], coverage_resolution, entries.size());
        const std::string prefix =
            algorithm + "," + std::to_string(run.at("replicate").get<std::size_t>()) + "," +
            std::to_string(run.at("seed").get<std::uint64_t>()) + ",";
        std::int64_t evals = 0, succ = 0;
        for (std::size_t g = 0; g < entries.size(); ++g) {
            evals += entries[g].evaluations;
            succ += entries[g].successes;
            const std::string p = prefix + std::to_string(g) + ",";
            out << p << "evaluations," << evals << '\n';
            out << p << "successes," << succ << '\n';
            out << p << "sample_efficiency," << fmt(evals > 0 ? static_cast<double>(succ) / static_cast<double>(evals) : 0.0)
                << '\n';
            out << p << "coverage," << fmt(cov[g]) << '\n';
            out << p << "repertoire_size," << succ << '\n';
        }
    }
}

} // namespace qdgrasp::campaign
