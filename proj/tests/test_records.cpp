#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "riverweb/errors.hpp"
#include "riverweb/records.hpp"

using namespace riverweb;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ResultRecord sample_record() {
  ResultRecord r;
  r.experiment = "survival";
  r.config = Json{{"p", 0.5}, {"n", 16}, {"replicas", 3}, {"seed", 1}};
  r.summary = Json{{"p_hat", 0.25}, {"ci_lo", 0.1}};
  r.columns = {"replica", "seed", "L", "censored"};
  r.rows = {Json{{"replica", 0}, {"seed", 18446744073709551615ULL}, {"L", 4}, {"censored", false}},
            Json{{"replica", 1}, {"seed", 7}, {"L", 17}, {"censored", true}},
            Json{{"replica", 2}, {"seed", 9}, {"L", 0.125}, {"censored", false}}};
  return r;
}

}  // namespace

TEST_CASE("csv cells") {
  CHECK(csv_cell(Json(true)) == "1");
  CHECK(csv_cell(Json(false)) == "0");
  CHECK(csv_cell(Json(12)) == "12");
  CHECK(csv_cell(Json(0.1)) == "0.1");
  CHECK(csv_cell(Json("a,b")) == "\"a,b\"");
  CHECK(csv_cell(Json("say \"hi\"")) == "\"say \"\"hi\"\"\"");
  CHECK(csv_cell(Json(nullptr)).empty());
}

TEST_CASE("empty record set gives a header-only CSV") {
  CHECK(to_csv({"replica", "seed", "L", "censored"}, {}) == "replica,seed,L,censored\n");
}

TEST_CASE("CSV round trip reproduces the rows") {
  const ResultRecord r = sample_record();
  const std::string text = to_csv(r.columns, r.rows);
  std::vector<std::string> cols;
  const auto rows = parse_csv(text, &cols);
  CHECK(cols == r.columns);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0]["seed"].get<std::uint64_t>() == 18446744073709551615ULL);
  CHECK(rows[1]["censored"] == 1);
  CHECK(rows[2]["L"].get<double>() == 0.125);
  CHECK(to_csv(cols, rows) == text);

  const auto quoted = parse_csv("a,b\n\"x,y\",2\n");
  CHECK(quoted[0]["a"] == "x,y");
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), Error);
  CHECK_THROWS_AS(parse_csv(""), Error);
}

TEST_CASE("summary and full documents") {
  const ResultRecord r = sample_record();
  const Json s = summary_json(r);
  CHECK(s["schema_version"] == kSchemaVersion);
  CHECK(s["experiment"] == "survival");
  CHECK(s["config"]["n"] == 16);
  CHECK(s["p_hat"] == 0.25);
  CHECK(!s.contains("rows"));
  const Json f = full_json(r);
  CHECK(f["rows"].size() == 3);
  CHECK(f["columns"][2] == "L");
  CHECK(f["rows"][1]["L"] == 17);
}

TEST_CASE("emit writes the documented files") {
  const auto dir = std::filesystem::temp_directory_path() / "riverweb_emit_test";
  std::filesystem::remove_all(dir);
  const ResultRecord r = sample_record();
  const auto csv = emit(r, dir, OutputFormat::csv);
  REQUIRE(csv.size() == 2);
  CHECK(csv[0].filename() == "survival.csv");
  CHECK(csv[1].filename() == "survival_summary.json");
  CHECK(slurp(csv[0]) == to_csv(r.columns, r.rows));
  CHECK(Json::parse(slurp(csv[1])) == summary_json(r));
  const auto json = emit(r, dir, OutputFormat::json);
  REQUIRE(json.size() == 1);
  CHECK(json[0].filename() == "survival.json");
  const Json doc = Json::parse(slurp(json[0]));
  CHECK(doc == full_json(r));
  // The JSON rows mirror the CSV rows.
  const auto parsed = parse_csv(slurp(csv[0]));
  for (std::size_t i = 0; i < parsed.size(); ++i)
    CHECK(parsed[i]["L"].get<double>() == doc["rows"][i]["L"].get<double>());
  std::filesystem::remove_all(dir);
}
