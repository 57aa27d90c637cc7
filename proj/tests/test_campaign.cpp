#include "qdgrasp/campaign.hpp"
#include "qdgrasp/records.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

using namespace qdgrasp;
using namespace qdgrasp::campaign;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("qdgrasp_test_campaign_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig smoke_config(const fs::path& out, algorithms::AlgorithmKind kind = algorithms::AlgorithmKind::nsmbs)
{
    RunConfig cfg;
    cfg.algorithm.kind = kind;
    cfg.algorithm.mu = 20;
    cfg.algorithm.lambda = 10;
    cfg.algorithm.generations = 15;
    cfg.algorithm.cvt_cells = 50;
    cfg.replicates = 2;
    cfg.seed = 31;
    cfg.output_dir = out;
    return cfg;
}

std::map<std::string, std::string> file_digests(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json")
            out[fs::relative(e.path(), dir).generic_string()] = records::sha256_file(e.path());
    return out;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_lines(const std::string& s)
{
    std::size_t n = 0;
    for (char c : s)
        n += c == '\n';
    return n;
}

} // namespace

TEST_CASE("config parsing")
{
    const RunConfig defaults = parse_config("{}");
    CHECK(defaults.seed == 1);
    CHECK(defaults.replicates == 1);
    CHECK(defaults.algorithm.mu == 100);
    CHECK(defaults.algorithm.lambda == 50);
    CHECK(defaults.algorithm.k == 15);
    CHECK(defaults.environment.n_dof == 3);

    const RunConfig c = parse_config(R"({
        // comments are fine
        "seed": 9, "replicates": 3,
        "algorithm": {"kind": "map_elites", "mu": 10, "cvt_cells": 64},
        "variation": {"sigma": 0.2, "p_mut": 0.3, "order": "mutation_then_crossover"},
        /* block comment */
        "environment": {"T": 120, "object": {"radius": 0.025}, "tolerances": {"touch_window_steps": 5}}
    })");
    CHECK(c.seed == 9);
    CHECK(c.replicates == 3);
    CHECK(c.algorithm.kind == algorithms::AlgorithmKind::map_elites);
    CHECK(c.algorithm.mu == 10);
    CHECK(c.algorithm.lambda == 50);
    CHECK(c.algorithm.cvt_cells == 64);
    CHECK(c.algorithm.variation.sigma == 0.2);
    CHECK(c.algorithm.variation.p_mut == 0.3);
    CHECK(c.algorithm.variation.order == variation::OperatorOrder::mutation_then_crossover);
    CHECK(c.environment.T == 120);
    CHECK(c.environment.object.radius == 0.025);
    CHECK(c.environment.tolerances.touch_window_steps == 5);

    CHECK(parse_config(R"({"variation": {"p_mut": null}})").algorithm.variation.p_mut < 0.0);

    // The canonical echo parses back to itself.
    CHECK(to_json(parse_config(to_json(c))) == to_json(c));
    CHECK(to_json(parse_config(to_json(defaults))) == to_json(defaults));

    CHECK_THROWS_AS(parse_config(R"({"sed": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"algorithm": {"muu": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"environment": {"gripper": {"width": 1}}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seed": "one"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"algorithm": {"kind": "cmaes"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"variation": {"order": "sideways"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"replicates": 0})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"algorithm": {"mu": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"environment": {"object": {"shape": "cube"}}})"), ConfigError);

    grasp::EnvConfig other;
    other.T = 200;
    CHECK(environment_digest(other) != environment_digest(grasp::EnvConfig{}));
    CHECK(environment_digest(grasp::EnvConfig{}) == environment_digest(grasp::EnvConfig{}));
    CHECK(environment_digest(other).size() == 64);
}

#ifdef QDGRASP_SOURCE_DIR
TEST_CASE("reference config documents the defaults")
{
    const RunConfig ref = load_config(fs::path(QDGRASP_SOURCE_DIR) / "configs" / "reference.jsonc");
    RunConfig expected;
    expected.replicates = 10;
    expected.output_dir = "runs/nsmbs";
    expected.algorithm.generations = 500;
    CHECK(to_json(ref) == to_json(expected));
    CHECK_NOTHROW(load_config(fs::path(QDGRASP_SOURCE_DIR) / "configs" / "smoke.jsonc"));
}
#endif

TEST_CASE("individual records round trip")
{
    std::vector<Individual> inds(3);
    inds[0].genome = Genome{{0.1, -0.25, 1.0 / 3.0}};
    inds[0].behavior.components = {BehaviorPoint{0.5, -0.2}, std::nullopt, BehaviorPoint{1e-17}};
    inds[0].novelty = {std::numeric_limits<double>::infinity(), std::nullopt, 0.125};
    inds[0].success = true;
    inds[0].quality = -0.75;
    inds[0].eval_id = 42;
    inds[0].generation_born = 7;
    inds[2].genome = Genome{{2.0}};
    inds[2].eval_id = 0;

    std::stringstream buf;
    records::write_individuals(buf, inds, "nsmbs");
    const auto back = records::read_individuals(buf);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].genome == inds[i].genome);
        CHECK(back[i].behavior == inds[i].behavior);
        CHECK(back[i].novelty == inds[i].novelty);
        CHECK(back[i].success == inds[i].success);
        CHECK(back[i].quality == inds[i].quality);
        CHECK(back[i].eval_id == inds[i].eval_id);
        CHECK(back[i].generation_born == inds[i].generation_born);
    }

    std::stringstream garbage("{\"schema\": \"something else\"}\n");
    CHECK_THROWS_AS(records::read_individuals(garbage), records::FormatError);

    CHECK(records::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("history records round trip")
{
    RunHistory h;
    h.ledger = EvaluationBudgetLedger::from_entries({{10, 0}, {5, 2}});
    h.generations = {GenerationRecord{0, 10, 0, 10, 0, 0.0, 0.0, 0, 0},
                     GenerationRecord{1, 5, 2, 15, 2, 2.0 / 15.0, 0.02, 2, 6}};
    h.complete = false;
    std::stringstream buf;
    records::write_history(buf, h);
    const RunHistory back = records::read_history(buf);
    CHECK(back.generations == h.generations);
    CHECK(back.ledger.per_generation() == h.ledger.per_generation());
    CHECK_FALSE(back.complete);
}

TEST_CASE("smoke campaign writes verifiable, reproducible records")
{
    const fs::path dir = scratch("smoke");
    const RunConfig cfg = smoke_config(dir);
    const auto result = run_campaign(cfg);
    CHECK(result.complete());
    REQUIRE(result.runs.size() == 2);
    CHECK(result.manifest == dir / "manifest.json");
    for (std::size_t r = 0; r < 2; ++r) {
        CHECK(result.runs[r].seed == cfg.seed + r);
        for (const char* f : {"repertoire.jsonl", "archive.jsonl", "history.jsonl"})
            CHECK(fs::exists(run_directory(dir, r) / f));
    }
    CHECK(fs::exists(dir / "run_000"));
    CHECK(verify_manifest(dir).empty());

    // Files on disk match a live run with the same seed.
    const grasp::GraspEnvironment env(cfg.environment);
    algorithms::RunOptions opts;
    opts.coverage_resolution = cfg.coverage_resolution;
    for (std::size_t r = 0; r < 2; ++r) {
        const auto live = algorithms::run(cfg.algorithm, env, RngStream(cfg.seed + r, "run"), opts);
        const auto rd = run_directory(dir, r);
        const RunHistory h = records::read_history(rd / "history.jsonl");
        CHECK(h.generations == live.history.generations);
        CHECK(h.ledger.per_generation() == live.history.ledger.per_generation());
        CHECK(h.ledger.total_evaluations() == 20 + 10 * 15);
        const auto rep = records::read_individuals(rd / "repertoire.jsonl");
        REQUIRE(rep.size() == live.repertoire.size());
        for (std::size_t i = 0; i < rep.size(); ++i)
            CHECK(rep[i].eval_id == live.repertoire[i].eval_id);
        CHECK(records::read_individuals(rd / "archive.jsonl").size() == live.archive.size());
    }

    // Metrics recomputed from files agree with the values logged during the run.
    const auto cm = load_campaign_metrics(dir, cfg.coverage_resolution);
    CHECK(cm.algorithm == "nsmbs");
    CHECK(cm.environment_digest == environment_digest(cfg.environment));
    REQUIRE(cm.runs.size() == 2);
    for (std::size_t r = 0; r < 2; ++r) {
        const auto& last = cm.histories[r].generations.back();
        CHECK(cm.runs[r].evaluations == 170);
        CHECK(cm.runs[r].sample_efficiency == doctest::Approx(last.sample_efficiency).epsilon(1e-12));
        CHECK(cm.runs[r].coverage == doctest::Approx(last.coverage).epsilon(1e-12));
        CHECK(static_cast<std::int64_t>(cm.runs[r].repertoire_size) == last.repertoire_size);
    }

    // Rerunning into a fresh directory and with more evaluator threads gives identical records.
    const fs::path again = scratch("smoke_again");
    RunConfig cfg2 = cfg;
    cfg2.output_dir = again;
    run_campaign(cfg2);
    CHECK(file_digests(again) == file_digests(dir));

    const fs::path par = scratch("smoke_parallel");
    RunConfig cfg3 = cfg;
    cfg3.output_dir = par;
    cfg3.parallel_evaluators = 3;
    run_campaign(cfg3);
    CHECK(file_digests(par) == file_digests(dir));

    // Tampering and deletion are both reported.
    {
        std::ofstream f(dir / "run_001" / "history.jsonl", std::ios::app);
        f << "\n";
    }
    fs::remove(dir / "run_000" / "archive.jsonl");
    const auto bad = verify_manifest(dir);
    REQUIRE(bad.size() == 2);
    CHECK(bad[0] == "run_000/archive.jsonl");
    CHECK(bad[1] == "run_001/history.jsonl");

    for (const auto& p : {dir, again, par})
        fs::remove_all(p);
}

TEST_CASE("metrics csv")
{
    const fs::path dir = scratch("csv");
    RunConfig cfg = smoke_config(dir);
    cfg.algorithm.generations = 4;
    run_campaign(cfg);
    std::ostringstream out;
    write_metrics_csv(dir, 10, out);
    const std::string csv = out.str();
    // Header + 2 runs x 5 generations x 5 metrics.
    CHECK(count_lines(csv) == 1 + 2 * 5 * 5);
    CHECK(csv.rfind("algorithm,run,seed,generation,metric,value\n", 0) == 0);
    CHECK(csv.find("nsmbs,0,31,0,evaluations,20\n") != std::string::npos);
    CHECK(csv.find("nsmbs,1,32,4,evaluations,60\n") != std::string::npos);
    CHECK_THROWS_AS(write_metrics_csv(dir, 10, out, 9), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("comparing campaigns")
{
    const fs::path a = scratch("cmp_a"), b = scratch("cmp_b"), c = scratch("cmp_c");
    RunConfig ca = smoke_config(a);
    ca.algorithm.generations = 5;
    RunConfig cb = smoke_config(b, algorithms::AlgorithmKind::random);
    cb.algorithm.generations = 5;
    run_campaign(ca);
    run_campaign(cb);

    const auto cmp = compare({a, b}, 10);
    REQUIRE(cmp.rows.size() == 2);
    CHECK(cmp.rows[0].label == "nsmbs");
    CHECK(cmp.rows[1].label == "random");
    CHECK(cmp.rows[0].runs == 2);
    REQUIRE(cmp.tests.size() == 1);
    CHECK(cmp.tests[0].p_efficiency >= 0.0);
    CHECK(cmp.tests[0].p_efficiency <= 1.0);
    CHECK(cmp.tests[0].p_coverage <= 1.0);

    std::ostringstream table;
    write_comparison(cmp, table);
    CHECK(table.str().find("nsmbs") != std::string::npos);
    CHECK(table.str().find("\nalgorithm_a,algorithm_b,p_sample_efficiency,p_coverage\n") != std::string::npos);

    const fs::path a2 = scratch("cmp_a2");
    fs::copy(a, a2, fs::copy_options::recursive);
    const auto same = compare({a, a2}, 10);
    CHECK(same.rows[0].label != same.rows[1].label);
    CHECK(same.rows[0].label.find('@') != std::string::npos);

    CHECK_THROWS_AS(compare({a}, 10), ConfigError);

    RunConfig cc = smoke_config(c);
    cc.algorithm.generations = 2;
    cc.environment.T = 150;
    run_campaign(cc);
    try {
        compare({a, c}, 10);
        FAIL("expected incompatible environments");
    }
    catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("incompatible environments") != std::string::npos);
    }
    for (const auto& p : {a, a2, b, c})
        fs::remove_all(p);
}

#ifdef QDGRASP_CLI_PATH
namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string("\"") + QDGRASP_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("command-line tool")
{
    const fs::path root = scratch("cli");
    fs::create_directories(root);
    const fs::path config = root / "smoke.jsonc";
    {
        std::ofstream f(config);
        f << R"({
  // tiny campaign
  "replicates": 1,
  "algorithm": {"kind": "ns_concat", "mu": 10, "lambda": 5, "generations": 3}
})";
    }
    const fs::path out1 = root / "a", out2 = root / "b";
    CHECK(run_cli("run " + config.string() + " --output " + out1.string()) == 0);
    CHECK(run_cli("run " + config.string() + " --output " + out2.string() + " --seed 5 --parallel 2") == 0);
    CHECK(fs::exists(out1 / "manifest.json"));
    CHECK(slurp(out2 / "manifest.json").find("\"seed\": 5") != std::string::npos);

    CHECK(run_cli("verify " + out1.string()) == 0);
    CHECK(run_cli("compare " + out1.string() + " " + out2.string() + " -o " + (root / "cmp.csv").string()) == 0);
    CHECK(slurp(root / "cmp.csv").find("ns_concat@") != std::string::npos);
    CHECK(run_cli("metrics " + out1.string() + " -o " + (root / "m.csv").string()) == 0);
    CHECK(count_lines(slurp(root / "m.csv")) == 1 + 4 * 5);

    {
        std::ofstream g(root / "genome.json");
        g << "[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.5]";
    }
    CHECK(run_cli("dump-trace " + config.string() + " " + (root / "genome.json").string() + " -o " +
                  (root / "trace.csv").string()) == 0);
    CHECK(count_lines(slurp(root / "trace.csv")) > 100);

    {
        std::ofstream f(out1 / "run_000" / "repertoire.jsonl", std::ios::app);
        f << "x";
    }
    CHECK(run_cli("verify " + out1.string()) == 4);

    const fs::path bad = root / "bad.json";
    {
        std::ofstream f(bad);
        f << R"({"algorithm": {"mu": 0}})";
    }
    CHECK(run_cli("run " + bad.string() + " --output " + (root / "c").string()) == 2);
    CHECK(run_cli("no-such-command") != 0);
    fs::remove_all(root);
}
#endif
