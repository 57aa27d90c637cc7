#pragma once

#include "qdgrasp/history.hpp"
#include "qdgrasp/types.hpp"

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace qdgrasp::records {

inline constexpr int schema_version = 1;

/// Line-delimited individuals: a header line, then one JSON object per individual with
/// genome, behavior (null where undefined), novelty snapshot ("inf" for unbounded novelty),
/// success, quality, eval_id and generation.
void write_individuals(std::ostream& out, const std::vector<Individual>& individuals, std::string_view kind);
std::vector<Individual> read_individuals(std::istream& in);

void write_individuals(const std::filesystem::path& path, const std::vector<Individual>& individuals,
                       std::string_view kind);
std::vector<Individual> read_individuals(const std::filesystem::path& path);

/// Header line (schema, version, completion flag), then one JSON object per generation.
void write_history(std::ostream& out, const RunHistory& history);
RunHistory read_history(std::istream& in);

void write_history(const std::filesystem::path& path, const RunHistory& history);
RunHistory read_history(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Raised for unreadable or malformed record files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qdgrasp::records
