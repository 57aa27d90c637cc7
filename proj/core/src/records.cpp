#include "qdgrasp/records.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace qdgrasp::records {

using nlohmann::json;

namespace {

constexpr const char* repertoire_schema = "qdgrasp.individuals";
constexpr const char* history_schema = "qdgrasp.history";

json novelty_value(const std::optional<double>& v)
{
    if (!v)
        return nullptr;
    if (std::isinf(*v))
        return *v > 0 ? "inf" : "-inf";
    return *v;
}

std::optional<double> parse_novelty(const json& j)
{
    if (j.is_null())
        return std::nullopt;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        throw FormatError("bad novelty value: " + s);
    }
    return j.get<double>();
}

json to_json(const Individual& ind)
{
    json behavior = json::array();
    for (const auto& c : ind.behavior.components)
        behavior.push_back(c ? json(*c) : json(nullptr));
    json novelty = json::array();
    for (const auto& n : ind.novelty)
        novelty.push_back(novelty_value(n));
    return json{{"eval_id", ind.eval_id},      {"generation", ind.generation_born},
                {"genome", ind.genome.params}, {"behavior", behavior},
                {"novelty", novelty},          {"success", ind.success},
                {"quality", ind.quality}};
}

Individual individual_from_json(const json& j)
{
    Individual ind;
    ind.eval_id = j.at("eval_id").get<std::int64_t>();
    ind.generation_born = j.at("generation").get<int>();
    ind.genome.params = j.at("genome").get<std::vector<double>>();
    for (const auto& c : j.at("behavior")) {
        if (c.is_null())
            ind.behavior.components.emplace_back(std::nullopt);
        else
            ind.behavior.components.emplace_back(c.get<std::vector<double>>());
    }
    for (const auto& n : j.at("novelty"))
        ind.novelty.push_back(parse_novelty(n));
    ind.success = j.at("success").get<bool>();
    ind.quality = j.at("quality").get<double>();
    return ind;
}

json read_header(std::istream& in, const char* schema)
{
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("missing header line");
    json header;
    try {
        header = json::parse(line);
    }
    catch (const json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }
    if (header.value("schema", "") != schema)
        throw FormatError(std::string("expected schema ") + schema);
    if (header.value("version", -1) != schema_version)
        throw FormatError("unsupported schema version");
    return header;
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        try {
            fn(json::parse(line));
        }
        catch (const json::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot read " + path.string());
    return in;
}

} // namespace

void write_individuals(std::ostream& out, const std::vector<Individual>& individuals, std::string_view kind)
{
    out << json{{"schema", repertoire_schema}, {"version", schema_version}, {"kind", kind}}.dump() << '\n';
    for (const auto& ind : individuals)
        out << to_json(ind).dump() << '\n';
}

std::vector<Individual> read_individuals(std::istream& in)
{
    read_header(in, repertoire_schema);
    std::vector<Individual> out;
    for_each_record(in, [&](const json& j) { out.push_back(individual_from_json(j)); });
    return out;
}

void write_individuals(const std::filesystem::path& path, const std::vector<Individual>& individuals,
                       std::string_view kind)
{
    auto out = open_out(path);
    write_individuals(out, individuals, kind);
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

std::vector<Individual> read_individuals(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_individuals(in);
}

void write_history(std::ostream& out, const RunHistory& history)
{
    out << json{{"schema", history_schema}, {"version", schema_version}, {"complete", history.complete}}.dump()
        << '\n';
    for (const auto& g : history.generations) {
        out << json{{"generation", g.generation},
                    {"evaluations", g.evaluations},
                    {"successes", g.successes},
                    {"cumulative_evaluations", g.cumulative_evaluations},
                    {"cumulative_successes", g.cumulative_successes},
                    {"sample_efficiency", g.sample_efficiency},
                    {"coverage", g.coverage},
                    {"repertoire_size", g.repertoire_size},
                    {"archive_size", g.archive_size}}
                   .dump()
            << '\n';
    }
}

RunHistory read_history(std::istream& in)
{
    const json header = read_header(in, history_schema);
    RunHistory h;
    h.complete = header.value("complete", true);
    std::vector<EvaluationBudgetLedger::Entry> entries;
    for_each_record(in, [&](const json& j) {
        GenerationRecord g;
        g.generation = j.at("generation").get<int>();
        g.evaluations = j.at("evaluations").get<std::int64_t>();
        g.successes = j.at("successes").get<std::int64_t>();
        g.cumulative_evaluations = j.at("cumulative_evaluations").get<std::int64_t>();
        g.cumulative_successes = j.at("cumulative_successes").get<std::int64_t>();
        g.sample_efficiency = j.at("sample_efficiency").get<double>();
        g.coverage = j.at("coverage").get<double>();
        g.repertoire_size = j.at("repertoire_size").get<std::int64_t>();
        g.archive_size = j.at("archive_size").get<std::int64_t>();
        if (g.generation != static_cast<int>(h.generations.size()))
            throw FormatError("history generations are not consecutive");
        h.generations.push_back(g);
        entries.push_back({g.evaluations, g.successes});
    });
    try {
        h.ledger = EvaluationBudgetLedger::from_entries(std::move(entries));
    }
    catch (const std::exception& e) {
        throw FormatError(std::string("inconsistent ledger: ") + e.what());
    }
    return h;
}

void write_history(const std::filesystem::path& path, const RunHistory& history)
{
    auto out = open_out(path);
    write_history(out, history);
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

RunHistory read_history(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_history(in);
}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path)
{
    auto in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

} // namespace qdgrasp::records
