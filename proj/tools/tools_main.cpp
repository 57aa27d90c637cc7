// qdgrasp: run seeded search campaigns, compare them, export metrics and rollout traces.

#include "qdgrasp/campaign.hpp"
#include "qdgrasp/grasp_env.hpp"
#include "qdgrasp/records.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace qdgrasp;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<std::size_t> parallel;
    std::optional<std::size_t> coverage_resolution;
    std::optional<std::string> output;
};

void apply(const Overrides& o, campaign::RunConfig& cfg)
{
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.replicates)
        cfg.replicates = *o.replicates;
    if (o.parallel)
        cfg.parallel_evaluators = *o.parallel;
    if (o.coverage_resolution)
        cfg.coverage_resolution = *o.coverage_resolution;
    if (o.output)
        cfg.output_dir = *o.output;
    campaign::validate(cfg);
}

// Accepts a JSON array, a JSON object with a "genome" array (one repertoire line), or
// whitespace-separated numbers.
Genome read_genome(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    Genome g;
    if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
        const auto j = nlohmann::json::parse(text);
        g.params = (j.is_object() ? j.at("genome") : j).get<std::vector<double>>();
        return g;
    }
    std::istringstream words(text);
    double v;
    while (words >> v)
        g.params.push_back(v);
    if (!words.eof())
        throw ConfigError("genome file must contain numbers only");
    return g;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quality-diversity grasp repertoire search"};
    app.require_subcommand(1);

    Overrides overrides;
    std::size_t coverage_resolution = 10;

    auto* run = app.add_subcommand("run", "Run a seeded campaign from a config file");
    std::string run_config;
    run->add_option("config", run_config, "Config file (JSON, comments allowed)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", overrides.seed, "Root seed; replicate r uses seed + r");
    run->add_option("--replicates", overrides.replicates, "Number of replicate runs");
    run->add_option("--parallel", overrides.parallel, "Parallel evaluator threads");
    run->add_option("--coverage-resolution", overrides.coverage_resolution, "Grid bins per dimension for coverage");
    run->add_option("--output", overrides.output, "Output directory (overrides output_dir)");

    auto* cmp = app.add_subcommand("compare", "Compare campaigns run on the same environment");
    std::vector<std::string> cmp_dirs;
    std::string cmp_out;
    cmp->add_option("dirs", cmp_dirs, "Campaign directories")->required()->expected(2, -1);
    cmp->add_option("--coverage-resolution", coverage_resolution, "Grid bins per dimension for coverage");
    cmp->add_option("-o,--output", cmp_out, "Write the table here instead of stdout");

    auto* met = app.add_subcommand("metrics", "Tidy per-generation metrics CSV of one campaign");
    std::string met_dir, met_out;
    met->add_option("dir", met_dir, "Campaign directory")->required()->check(CLI::ExistingDirectory);
    met->add_option("--coverage-resolution", coverage_resolution, "Grid bins per dimension for coverage");
    met->add_option("-o,--output", met_out, "Write the CSV here instead of stdout");

    auto* dump = app.add_subcommand("dump-trace", "Per-step CSV of one rollout");
    std::string dump_config, dump_genome, dump_out;
    dump->add_option("config", dump_config, "Config file providing the environment")->required()->check(CLI::ExistingFile);
    dump->add_option("genome-file", dump_genome, "Genome as JSON array, repertoire line or numbers")
        ->required()
        ->check(CLI::ExistingFile);
    dump->add_option("-o,--output", dump_out, "Write the CSV here instead of stdout");

    auto* verify = app.add_subcommand("verify", "Check campaign files against the manifest digests");
    std::string verify_dir;
    verify->add_option("dir", verify_dir, "Campaign directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    auto with_output = [](const std::string& path, auto&& write) {
        if (path.empty()) {
            write(std::cout);
            return;
        }
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        write(out);
    };

    try {
        if (*run) {
            auto cfg = campaign::load_config(run_config);
            apply(overrides, cfg);
            const auto result = campaign::run_campaign(cfg, &std::cerr);
            std::cout << result.manifest.string() << '\n';
            return result.complete() ? 0 : 3;
        }
        if (*cmp) {
            std::vector<fs::path> dirs(cmp_dirs.begin(), cmp_dirs.end());
            const auto comparison = campaign::compare(dirs, coverage_resolution);
            with_output(cmp_out, [&](std::ostream& os) { campaign::write_comparison(comparison, os); });
            return 0;
        }
        if (*met) {
            with_output(met_out,
                        [&](std::ostream& os) { campaign::write_metrics_csv(met_dir, coverage_resolution, os); });
            return 0;
        }
        if (*dump) {
            const auto cfg = campaign::load_config(dump_config);
            const auto trace = grasp::rollout(read_genome(dump_genome), cfg.environment);
            with_output(dump_out, [&](std::ostream& os) { grasp::write_trace_csv(trace, os); });
            return 0;
        }
        if (*verify) {
            const auto bad = campaign::verify_manifest(verify_dir);
            for (const auto& f : bad)
                std::cout << "MODIFIED " << f << '\n';
            if (bad.empty())
                std::cout << "ok\n";
            return bad.empty() ? 0 : 4;
        }
    }
    catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
