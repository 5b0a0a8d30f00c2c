#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace revctl {

std::string tool_version_line();

/// FNV-1a 64 of the canonical (sorted-key, compact) JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// "# revctl <version>\n# config_hash <hash>\n"
std::string provenance_header(const std::string& hash);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// Comma-separated table with a header row; '#' lines are skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);

}  // namespace revctl
