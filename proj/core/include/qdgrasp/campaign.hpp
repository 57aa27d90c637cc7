#pragma once

#include "qdgrasp/algorithms.hpp"
#include "qdgrasp/grasp_env.hpp"
#include "qdgrasp/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qdgrasp::campaign {

struct RunConfig {
    algorithms::AlgorithmConfig algorithm;
    grasp::EnvConfig environment;
    std::uint64_t seed = 1;
    std::size_t replicates = 1;
    std::filesystem::path output_dir = "runs";
    std::size_t parallel_evaluators = 1;
    std::size_t coverage_resolution = 10;
    // Where CVT centroids are cached between campaigns; empty disables the cache.
    std::filesystem::path cvt_cache_dir;
};

/// Throws ConfigError if any block is invalid.
void validate(const RunConfig& cfg);

/// Parses a JSON config (comments allowed). Keys absent from the file keep their defaults;
/// unknown keys are rejected. Relative paths are kept as written.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON echo of the full config, defaults included.
std::string to_json(const RunConfig& cfg);
std::string environment_to_json(const grasp::EnvConfig& env);
/// SHA-256 of the canonical environment JSON; campaigns are comparable only when these match.
std::string environment_digest(const grasp::EnvConfig& env);

struct ReplicateOutcome {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    bool complete = true;
    std::string error;
    std::filesystem::path directory;
};

struct CampaignResult {
    std::vector<ReplicateOutcome> runs;
    std::filesystem::path manifest;
    bool complete() const;
};

/// Runs `replicates` seeded runs (seed + r) and writes, per run, repertoire.jsonl,
/// archive.jsonl and history.jsonl under run_NNN/, then manifest.json with the config echo,
/// environment digest, per-run status and the SHA-256 of every written file.
/// A run whose environment fails keeps its partial files and is flagged in the manifest.
CampaignResult run_campaign(const RunConfig& cfg, std::ostream* log = nullptr);

std::filesystem::path run_directory(const std::filesystem::path& output_dir, std::size_t replicate);

/// Files whose current digest differs from the manifest (missing files included).
std::vector<std::string> verify_manifest(const std::filesystem::path& campaign_dir);

struct RunMetrics {
    std::size_t replicate = 0;
    bool complete = true;
    std::optional<int> first_success_generation;
    double sample_efficiency = 0.0;
    double coverage = 0.0;
    std::size_t repertoire_size = 0;
    std::int64_t evaluations = 0;
};

/// Metrics of every run of a campaign, recomputed from the files on disk.
struct CampaignMetrics {
    std::filesystem::path directory;
    std::string algorithm;
    std::string environment_digest;
    std::vector<RunMetrics> runs;
    std::vector<RunHistory> histories;
};

CampaignMetrics load_campaign_metrics(const std::filesystem::path& campaign_dir, std::size_t coverage_resolution,
                                      std::size_t coverage_component = 3);

struct AlgorithmRow {
    std::string label;
    std::filesystem::path directory;
    std::size_t runs = 0;
    double successful_run_rate = 0.0;
    metrics::Summary first_success;
    metrics::Summary efficiency;
    metrics::Summary coverage;
    metrics::Summary repertoire_size;
};

struct PairwiseTest {
    std::string a;
    std::string b;
    double p_efficiency = 1.0;
    double p_coverage = 1.0;
};

struct Comparison {
    std::vector<AlgorithmRow> rows;
    std::vector<PairwiseTest> tests;
    std::vector<CampaignMetrics> campaigns;
};

/// Needs at least two campaigns with identical environment digests; throws ConfigError otherwise.
Comparison compare(const std::vector<std::filesystem::path>& campaign_dirs, std::size_t coverage_resolution,
                   std::size_t coverage_component = 3);

/// Two CSV tables separated by a blank line: per-algorithm summaries, then pairwise p-values.
void write_comparison(const Comparison& cmp, std::ostream& out);

/// Tidy CSV, one row per run x generation x metric (evaluations, successes, sample_efficiency,
/// coverage, repertoire_size), recomputed from the campaign's files.
void write_metrics_csv(const std::filesystem::path& campaign_dir, std::size_t coverage_resolution, std::ostream& out,
                       std::size_t coverage_component = 3);

} // namespace qdgrasp::campaign
