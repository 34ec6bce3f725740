#include "riverweb/records.hpp"

#include <fstream>
#include <sstream>

#include "riverweb/errors.hpp"

namespace riverweb {

std::string csv_cell(const Json& value) {
  if (value.is_boolean()) return value.get<bool>() ? "1" : "0";
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  if (value.is_null()) return "";
  return value.dump();
}

std::string to_csv(const std::vector<std::string>& columns, const std::vector<Json>& rows) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      const auto it = row.find(columns[i]);
      if (it != row.end()) out += csv_cell(*it);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

Json parse_cell(const std::string& cell) {
  if (cell.empty()) return nullptr;
  try {
    Json v = Json::parse(cell);
    if (v.is_number()) return v;
  } catch (const Json::parse_error&) {
  }
  return cell;
}

}  // namespace

std::vector<Json> parse_csv(const std::string& text, std::vector<std::string>* columns) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV text");
  const auto header = split_csv_line(line);
  if (columns) *columns = header;
  std::vector<Json> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw Error("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                                   std::to_string(header.size()));
    Json row = Json::object();
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = parse_cell(cells[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

Json summary_json(const ResultRecord& record) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["riverweb_version"] = kRiverwebVersion;
  j["experiment"] = record.experiment;
  j["config"] = record.config;
  for (const auto& [key, value] : record.summary.items()) j[key] = value;
  return j;
}

Json full_json(const ResultRecord& record) {
  Json j = summary_json(record);
  j["columns"] = record.columns;
  j["rows"] = record.rows;
  return j;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> emit(const ResultRecord& record, const std::filesystem::path& out_dir,
                                        OutputFormat format) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  if (format == OutputFormat::csv) {
    const auto csv = out_dir / (record.experiment + ".csv");
    write_file(csv, to_csv(record.columns, record.rows));
    written.push_back(csv);
    const auto summary = out_dir / (record.experiment + "_summary.json");
    write_file(summary, summary_json(record).dump(2) + "\n");
    written.push_back(summary);
  } else {
    const auto path = out_dir / (record.experiment + ".json");
    write_file(path, full_json(record).dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace riverweb
