#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtheory/error.hpp"
#include "gtheory/report.hpp"
#include "support.hpp"

using namespace gtheory;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gtheory");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "gtheory_report_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_text(const std::string& name, const std::string& text) {
  auto path = scratch(name);
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kWorkedCsv = "person,item,Response\n1,1,1\n1,2,2\n2,1,3\n2,2,5\n";

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

// Splits a text-table line on runs of two or more spaces.
std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    std::size_t j = line.find("  ", i);
    if (j == std::string::npos) j = line.size();
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
    while (i < line.size() && line[i] == ' ') ++i;
  }
  return out;
}

// Rows of the text table that follows `title`, header excluded.
std::vector<std::vector<std::string>> table_after(const std::string& text, const std::string& title) {
  std::istringstream in(text.substr(text.find(title + "\n")));
  std::string line;
  std::getline(in, line);  // title
  std::getline(in, line);  // header
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line) && !line.empty()) {
    if (line.rfind("Observations:", 0) == 0) break;
    rows.push_back(cells(line));
  }
  return rows;
}

Report worked_report(std::optional<DStudyGrid> grid = std::nullopt) {
  RunConfig config;
  config.data_path = "worked.csv";
  config.design_str = "p x i";
  config.response = "Response";
  config.dstudy_grid = std::move(grid);
  return build_report(config, testing::worked_fixture());
}

}  // namespace

TEST_CASE("text ANOVA rows") {
  auto text = render_anova(run_anova(testing::worked_fixture()), OutputFormat::Text);
  auto rows = table_after(text, "ANOVA");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"p", "1", "36.5", "6.25", "6.25", "3"});
  CHECK(rows[1] == std::vector<std::string>{"i", "1", "32.5", "2.25", "2.25", "1"});
  CHECK(rows[2] == std::vector<std::string>{"p x i", "1", "39", "0.25", "0.25", "0.25"});
  CHECK(text.find("T(U): 30.25") != std::string::npos);

  auto flat = run_anova(testing::dataset_from_values("p x i", {2, 3}, std::vector<double>(6, 9.0)));
  for (const auto& row : table_after(render_anova(flat, OutputFormat::Text), "ANOVA")) CHECK(row[5] == "0");
}

TEST_CASE("JSON ANOVA schema") {
  auto j = json::parse(render_anova(run_anova(testing::worked_fixture()), OutputFormat::Json));
  REQUIRE(j["rows"].is_array());
  for (const auto& row : j["rows"]) {
    for (const char* key : {"component", "df", "t", "ss", "ms", "sigma2"}) CHECK(row.contains(key));
  }
  CHECK(j["rows"][0]["component"] == "p");
  CHECK(j["rows"][0]["sigma2"].get<double>() == doctest::Approx(3.0));
  CHECK(j["t_u"].get<double>() == doctest::Approx(30.25));
}

TEST_CASE("coefficient table and undefined values") {
  auto report = worked_report();
  auto rows = table_after(render_g_table(report.g_coefficients, OutputFormat::Text), "G coefficients");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == "p");
  CHECK(rows[0][1] == "0.960000");
  CHECK(rows[0][2] == "0.827586");
  CHECK(rows[1][1] == "0.888889");
  CHECK(rows[1][2] == "0.380952");

  auto flat = testing::dataset_from_values("p x i", {2, 2}, {1, 1, 1, 1});
  RunConfig config;
  config.design_str = "p x i";
  auto fr = build_report(config, flat);
  auto text = render_g_table(fr.g_coefficients, OutputFormat::Text);
  CHECK(table_after(text, "G coefficients")[0][1] == "undefined");
  auto csv = render_g_table(fr.g_coefficients, OutputFormat::Csv);
  CHECK(csv.find(",undefined,undefined,") != std::string::npos);
  auto j = json::parse(render_g_table(fr.g_coefficients, OutputFormat::Json));
  CHECK(j[0]["e_rho2"].is_null());
}

TEST_CASE("full report layout and JSON keys") {
  auto report = worked_report(DStudyGrid{{"i", {4, 8}}});
  auto text = render_report(report, OutputFormat::Text);
  for (const char* section : {"Design: p x i", "ANOVA", "G coefficients", "D-study",
                              "Confidence intervals for p (alpha = 0.05)",
                              "Confidence intervals for i (alpha = 0.05)"}) {
    CHECK(text.find(section) != std::string::npos);
  }
  auto j = json::parse(render_report(report, OutputFormat::Json));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"anova", "confidence_intervals", "config_echo", "d_study",
                                         "g_coefficients", "warnings"});
  CHECK(j["d_study"][0]["scenarios"].size() == 2);
  CHECK(j["config_echo"]["design"] == "p x i");

  auto no_d = json::parse(render_report(worked_report(), OutputFormat::Json));
  CHECK_FALSE(no_d.contains("d_study"));
}

TEST_CASE("JSON carries full precision") {
  auto data = testing::random_dataset("p x r x i", {4, 3, 5}, 3);
  RunConfig config;
  config.design_str = "p x r x i";
  config.dstudy_grid = DStudyGrid{{"r", {2, 6}}};
  auto report = build_report(config, data);
  auto j = json::parse(render_report(report, OutputFormat::Json));
  for (std::size_t r = 0; r < report.anova.rows.size(); ++r) {
    const auto& row = report.anova.rows[r];
    CHECK(j["anova"]["rows"][r]["t"].get<double>() == row.t_value);
    CHECK(j["anova"]["rows"][r]["ss"].get<double>() == row.ss);
    CHECK(j["anova"]["rows"][r]["ms"].get<double>() == row.ms);
    CHECK(j["anova"]["rows"][r]["sigma2"].get<double>() == row.sigma2);
  }
  for (std::size_t g = 0; g < report.g_coefficients.size(); ++g) {
    const auto& res = report.g_coefficients[g];
    CHECK(j["g_coefficients"][g]["tau"].get<double>() == res.tau);
    CHECK(j["g_coefficients"][g]["Delta"].get<double>() == res.Delta);
    if (res.e_rho2) CHECK(j["g_coefficients"][g]["e_rho2"].get<double>() == *res.e_rho2);
  }
  for (std::size_t s = 0; s < report.confidence.size(); ++s) {
    for (std::size_t i = 0; i < report.confidence[s].intervals.size(); ++i) {
      const auto& ci = report.confidence[s].intervals[i];
      CHECK(j["confidence_intervals"][s]["intervals"][i]["lower"].get<double>() == ci.lower);
      CHECK(j["confidence_intervals"][s]["intervals"][i]["mean"].get<double>() == ci.mean);
    }
  }
  const auto& sc = (*report.d_study)[0].scenarios[1].coefficients;
  CHECK(j["d_study"][0]["scenarios"][1]["phi"].get<double>() == *sc.phi);
}

TEST_CASE("text numbers equal JSON values at six significant digits") {
  auto data = testing::random_dataset("p x (r:i)", {5, 3, 4}, 21, 50.0, 10.0);
  RunConfig config;
  config.design_str = "p x (r:i)";
  auto report = build_report(config, data);
  auto text = render_report(report, OutputFormat::Text);
  auto j = json::parse(render_report(report, OutputFormat::Json));

  auto anova_rows = table_after(text, "ANOVA");
  REQUIRE(anova_rows.size() == j["anova"]["rows"].size());
  for (std::size_t r = 0; r < anova_rows.size(); ++r) {
    const auto& jr = j["anova"]["rows"][r];
    CHECK(anova_rows[r][0] == jr["component"].get<std::string>());
    CHECK(anova_rows[r][1] == std::to_string(jr["df"].get<int>()));
    CHECK(anova_rows[r][2] == fmt("%.6g", jr["t"].get<double>()));
    CHECK(anova_rows[r][3] == fmt("%.6g", jr["ss"].get<double>()));
    CHECK(anova_rows[r][4] == fmt("%.6g", jr["ms"].get<double>()));
    CHECK(anova_rows[r][5] == fmt("%.6g", jr["sigma2"].get<double>()));
  }
  auto g_rows = table_after(text, "G coefficients");
  for (std::size_t g = 0; g < g_rows.size(); ++g) {
    const auto& jg = j["g_coefficients"][g];
    CHECK(std::stod(g_rows[g][1]) == std::stod(fmt("%.6g", jg["e_rho2"].get<double>())));
    CHECK(std::stod(g_rows[g][2]) == std::stod(fmt("%.6g", jg["phi"].get<double>())));
    CHECK(g_rows[g][3] == fmt("%.6g", jg["tau"].get<double>()));
    CHECK(g_rows[g][4] == fmt("%.6g", jg["delta"].get<double>()));
    CHECK(g_rows[g][5] == fmt("%.6g", jg["Delta"].get<double>()));
  }
  auto ci_rows = table_after(text, "Confidence intervals for p (alpha = 0.05)");
  const auto& jci = j["confidence_intervals"][0]["intervals"];
  REQUIRE(ci_rows.size() == jci.size());
  for (std::size_t i = 0; i < ci_rows.size(); ++i) {
    CHECK(ci_rows[i][0] == jci[i]["level"].get<std::string>());
    CHECK(ci_rows[i][1] == fmt("%.6g", jci[i]["mean"].get<double>()));
    CHECK(ci_rows[i][2] == fmt("%.6g", jci[i]["half_width"].get<double>()));
    CHECK(ci_rows[i][3] == fmt("%.6g", jci[i]["lower"].get<double>()));
    CHECK(ci_rows[i][4] == fmt("%.6g", jci[i]["upper"].get<double>()));
  }
}

TEST_CASE("rendering is deterministic") {
  for (auto format : {OutputFormat::Text, OutputFormat::Json, OutputFormat::Csv}) {
    auto a = render_report(worked_report(DStudyGrid{{"i", {1, 3}}}), format);
    auto b = render_report(worked_report(DStudyGrid{{"i", {1, 3}}}), format);
    CHECK(a == b);
  }
}

TEST_CASE("CSV quoting and directory output") {
  auto raw = load_table({"rater", "item", "Response"},
                        {{"Smith, J", "1", "1"}, {"Smith, J", "2", "2"}, {"Lee \"K\"", "1", "4"},
                         {"Lee \"K\"", "2", "3"}},
                        "Response");
  auto data = validate_and_index(raw, parse_design("rater x item"), "Response");
  RunConfig config;
  config.design_str = "rater x item";
  auto report = build_report(config, data);
  auto csv = render_ci(report.confidence, OutputFormat::Csv);
  CHECK(csv.find("rater,\"Lee \"\"K\"\"\",") != std::string::npos);
  CHECK(csv.find("rater,\"Smith, J\",") != std::string::npos);

  auto dir = scratch("tables");
  fs::remove_all(dir);
  write_csv_tables(report, dir);
  for (const char* f : {"anova.csv", "g_coefficients.csv", "confidence_intervals.csv", "warnings.csv"})
    CHECK(fs::exists(dir / f));
  CHECK_FALSE(fs::exists(dir / "d_study.csv"));
  CHECK(read_text(dir / "anova.csv").rfind("component,df,t,ss,ms,sigma2,negative\n", 0) == 0);
  CHECK(read_text(dir / "g_coefficients.csv").rfind("object,e_rho2,phi,", 0) == 0);
}

TEST_CASE("negative estimates raise warnings and flags") {
  // item means vary less than the interaction implies
  auto data = testing::dataset_from_values("p x i", {3, 3}, {1, 5, 3, 4, 2, 3, 3, 3, 3});
  RunConfig config;
  config.design_str = "p x i";
  auto report = build_report(config, data);
  bool any_negative = false;
  for (const auto& row : report.anova.rows) any_negative = any_negative || row.negative();
  REQUIRE(any_negative);
  CHECK_FALSE(report.warnings.empty());
  CHECK(render_anova(report.anova, OutputFormat::Text).find("negative") != std::string::npos);
}

TEST_CASE("format and role parsing") {
  CHECK(parse_format("JSON") == OutputFormat::Json);
  CHECK(parse_format("csv") == OutputFormat::Csv);
  CHECK_THROWS(parse_format("xml"));
}

TEST_CASE("cli: happy path, object choice and roles") {
  auto data = write_text("worked.csv", kWorkedCsv).string();
  auto r = run_cli({"--data", data, "--design", "person x item", "--response", "Response"});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(r.out.find("ANOVA") != std::string::npos);
  CHECK(r.out.find("0.960000  0.827586") != std::string::npos);

  auto one = run_cli({"--data", data, "--design", "person x item", "--response", "Response",
                      "--object", "person", "--format", "json"});
  REQUIRE(one.code == 0);
  auto j = json::parse(one.out);
  CHECK(j["g_coefficients"].size() == 1);
  CHECK(j["confidence_intervals"].size() == 1);
  CHECK(j["config_echo"]["object"] == "person");

  auto fixed = run_cli({"--data", data, "--design", "person x item", "--response", "Response",
                        "--roles", R"({"person":"object","item":"fixed"})", "--format", "json"});
  REQUIRE(fixed.code == 0);
  auto jf = json::parse(fixed.out);
  CHECK(jf["g_coefficients"].size() == 1);
  CHECK(jf["g_coefficients"][0]["e_rho2"].get<double>() == 1.0);
  CHECK(jf["g_coefficients"][0]["tau"].get<double>() == doctest::Approx(3.125));
}

TEST_CASE("cli: d-study grid") {
  auto data = write_text("worked.csv", kWorkedCsv).string();
  auto r = run_cli({"--data", data, "--design", "person x item", "--response", "Response",
                    "--dstudy", R"({"item":[4,8]})", "--format", "json"});
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  REQUIRE(j["d_study"].size() == 2);  // one block per object
  for (const auto& block : j["d_study"]) CHECK(block["scenarios"].size() == 2);
  CHECK(j["d_study"][0]["scenarios"][0]["e_rho2"].get<double>() == doctest::Approx(3.0 / 3.0625));

  auto text = run_cli({"--data", data, "--design", "person x item", "--response", "Response",
                       "--dstudy", R"({"item":[4,8]})"});
  CHECK(text.out.find("D-study") != std::string::npos);
}

TEST_CASE("cli: errors map to exit codes and prefixes") {
  auto data = write_text("worked.csv", kWorkedCsv).string();
  auto expect = [](const CliResult& r, int code, const std::string& prefix) {
    CHECK(r.code == code);
    CHECK(r.err.rfind(prefix, 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK(r.out.empty());
  };
  expect(run_cli({"--data", data, "--design", "a x a", "--response", "Response"}), 2,
         "ERROR:design:DuplicateFacet");
  expect(run_cli({"--data", data, "--design", "p x i:r", "--response", "Response"}), 2,
         "ERROR:design:MixedOperatorAmbiguity");
  expect(run_cli({"--design", "p x i", "--response", "Response"}), 2, "ERROR:usage:");
  expect(run_cli({"--data", data, "--design", "person x item", "--response", "Response", "--bogus"}),
         2, "ERROR:usage:");
  expect(run_cli({"--data", data, "--design", "person x item", "--response", "Response", "--alpha",
                  "1.5"}),
         2, "ERROR:usage:");
  expect(run_cli({"--data", data, "--design", "person x item", "--response", "Response", "--format",
                  "xml"}),
         2, "ERROR:usage:");
  expect(run_cli({"--data", data, "--design", "person x item", "--response", "Response", "--dstudy",
                  "{not json"}),
         2, "ERROR:usage:");
  expect(run_cli({"--data", data, "--design", "person x item", "--response", "Response", "--dstudy",
                  R"({"rater":[2]})"}),
         2, "ERROR:config:UnknownFacet");
  expect(run_cli({"--data", data, "--design", "person x item", "--response", "Response", "--roles",
                  R"({"item":"sometimes"})"}),
         2, "ERROR:config:UnknownRole");

  expect(run_cli({"--data", scratch("absent.csv").string(), "--design", "person x item",
                  "--response", "Response"}),
         3, "ERROR:data:Io");
  auto unbalanced = write_text("unbalanced.csv", "person,item,Response\n1,1,1\n1,2,2\n2,1,3\n").string();
  expect(run_cli({"--data", unbalanced, "--design", "person x item", "--response", "Response"}), 3,
         "ERROR:data:Unbalanced");
  auto bad = write_text("bad.csv", "person,item,Response\n1,1,1\n1,2,x\n").string();
  auto r = run_cli({"--data", bad, "--design", "person x item", "--response", "Response"});
  expect(r, 3, "ERROR:data:NonNumericResponse");
  CHECK(r.err.find("row 2") != std::string::npos);
  expect(run_cli({"--data", data, "--design", "person x rater", "--response", "Response"}), 3,
         "ERROR:data:MissingColumn");

  auto single = write_text("single.csv", "person,item,Response\n1,1,1\n2,1,2\n3,1,4\n").string();
  auto s = run_cli({"--data", single, "--design", "person x item", "--response", "Response"});
  expect(s, 4, "ERROR:compute:ZeroDf");
  CHECK(s.err.find("'item'") != std::string::npos);

  expect(run_cli({"--data", data, "--design", "person x item", "--response", "Response", "--out",
                  scratch("no/such/dir/report.txt").string()}),
         4, "ERROR:output:");
}

TEST_CASE("cli: output files match standard output") {
  auto data = write_text("worked.csv", kWorkedCsv).string();
  for (const char* format : {"text", "json", "csv"}) {
    auto path = scratch(std::string("report.") + format);
    fs::remove(path);
    auto to_file = run_cli({"--data", data, "--design", "person x item", "--response", "Response",
                            "--format", format, "--out", path.string()});
    auto to_stdout = run_cli({"--data", data, "--design", "person x item", "--response", "Response",
                              "--format", format});
    REQUIRE(to_file.code == 0);
    CHECK(to_file.out.empty());
    CHECK(read_text(path) == to_stdout.out);
  }
  auto dir = scratch("csvdir/");
  fs::remove_all(dir);
  auto r = run_cli({"--data", data, "--design", "person x item", "--response", "Response",
                    "--format", "csv", "--dstudy", R"({"item":[3]})", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "d_study.csv"));
  CHECK(read_text(dir / "d_study.csv").rfind("object,n_person,n_item,e_rho2", 0) == 0);
}

TEST_CASE("cli: identical runs give identical bytes") {
  auto data = write_text("worked.csv", kWorkedCsv).string();
  for (const char* format : {"text", "json", "csv"}) {
    std::vector<std::string> args{"--data", data, "--design", "person x item", "--response",
                                  "Response", "--dstudy", R"({"item":[1,2,4]})", "--format", format};
    auto a = run_cli(args);
    auto b = run_cli(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("cli: simulate subcommand") {
  auto path = scratch("sim.csv");
  std::vector<std::string> args{"simulate", "--design", "p x (r:i)", "--levels",
                                R"({"p":6,"r":2,"i":3})", "--truth", R"({"p":2,"(p x r):i":1})",
                                "--seed", "9", "--out", path.string()};
  auto r = run_cli(args);
  REQUIRE(r.code == 0);
  auto first = read_text(path);
  auto data = validate_and_index(load_table(path, "Response"), parse_design("p x (r:i)"), "Response");
  CHECK(data.levels().counts() == std::vector<std::size_t>{6, 2, 3});
  run_cli(args);
  CHECK(read_text(path) == first);

  auto bad = run_cli({"simulate", "--design", "p x i", "--levels", R"({"p":3,"i":3})", "--truth",
                      R"({"p":1})"});
  CHECK(bad.code == 2);
  CHECK(bad.err.rfind("ERROR:config:InvalidTruth", 0) == 0);
}
