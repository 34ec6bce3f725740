#pragma once

// Result records and their CSV / JSON serialization.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace riverweb {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kRiverwebVersion = "1.0.0";

enum class OutputFormat { csv, json };

/// Per-replica rows (flat objects sharing `columns`) and a flat summary.
/// Wall time is not part of the record so that outputs are reproducible.
struct ResultRecord {
  std::string experiment;
  Json config = Json::object();
  Json summary = Json::object();
  std::vector<std::string> columns;
  std::vector<Json> rows;
};

/// Text of one CSV cell: integers and strings as-is, booleans as 0/1, doubles
/// in the shortest form that round-trips.
std::string csv_cell(const Json& value);

std::string to_csv(const std::vector<std::string>& columns, const std::vector<Json>& rows);

/// Parses CSV written by to_csv back into rows; numeric cells become numbers.
std::vector<Json> parse_csv(const std::string& text, std::vector<std::string>* columns = nullptr);

/// The flat summary document: schema and version fields, the config echo, then the summary keys.
Json summary_json(const ResultRecord& record);

/// The full document for --format json: summary fields plus columns and rows.
Json full_json(const ResultRecord& record);

/// Writes <out>/<experiment>.csv and <out>/<experiment>_summary.json (csv), or
/// <out>/<experiment>.json (json). Returns the files written.
std::vector<std::filesystem::path> emit(const ResultRecord& record, const std::filesystem::path& out_dir,
                                        OutputFormat format);

}  // namespace riverweb
